from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    log_level: str = Field("INFO", description="Logging level for the CLI, e.g. DEBUG or WARNING")

    # Numerics
    max_step: float = Field(0.005, gt=0, description="Largest RK4 step; sets default substeps")
    control_dt: float = Field(0.25, gt=0, description="Control interval length when N is not pinned")

    # Sweep grid mode
    workers: int = Field(1, ge=1, description="Process pool size for independent horizons")

    # Output
    csv_float_format: str = "%.17g"

    model_config = SettingsConfigDict(
        env_prefix="BLOCH_CONTROL_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )


settings = Settings()
