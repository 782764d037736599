# Artifact persistence, one module per artifact kind
from . import crud_adjacency
from . import crud_checkpoint
from . import crud_dataset
from . import crud_runlog
from . import crud_tickets

# Export without prefix as well
adjacency = crud_adjacency
checkpoint = crud_checkpoint
dataset = crud_dataset
runlog = crud_runlog
tickets = crud_tickets

__all__ = [
    "crud_adjacency", "crud_checkpoint", "crud_dataset", "crud_runlog", "crud_tickets",
    "adjacency", "checkpoint", "dataset", "runlog", "tickets",
]
