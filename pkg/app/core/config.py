from pydantic_settings import BaseSettings
from functools import lru_cache
from pydantic import ConfigDict


class Settings(BaseSettings):
    PROJECT_NAME: str = 'EEG Graph Lottery Ticket'

    # -- Data and output locations --
    EEG_GLT_DATA_DIR: str = 'data'
    EEG_GLT_OUTPUT_DIR: str = 'out'
    ELECTRODE_LAYOUT_PATH: str | None = None  # None -> shipped 64-channel layout

    # -- Run defaults --
    DEFAULT_SEED: int = 0
    LAMBDA_MAX_MODE: str = "fixed_2"
    STRICT_ISOLATED_NODES: bool = False

    # -- Logging --
    LOG_LEVEL: str = "INFO"
    LOG_FILE: str | None = "eeg_glt.log"

    model_config = ConfigDict(
        env_file='.env',
        env_file_encoding='utf-8',
        extra='ignore',
    )


@lru_cache()
def get_settings():
    return Settings()


settings = get_settings()
