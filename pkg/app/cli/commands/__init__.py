# One module per subcommand; each exposes add_parser() and run()
from . import adjacency
from . import evaluate
from . import glt
from . import macs
from . import train

__all__ = ["adjacency", "evaluate", "glt", "macs", "train"]
