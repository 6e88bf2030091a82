from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="ATTN_LIPCERT_",
        env_file=".env",
        env_file_encoding="utf-8",
    )

    # Paralelismo de los barridos (ATTN_LIPCERT_THREADS)
    threads: int = Field(default=1, ge=1)

    # Power iteration
    power_tol: float = Field(default=1e-10, gt=0)
    power_max_iter: int = Field(default=10_000, ge=1)
    power_seed: int = 0

    # Diferencias finitas y ensamblado denso del Jacobiano
    fd_step: float = Field(default=1e-5, gt=0)
    dense_entry_budget: int = Field(default=40_000_000, ge=1)

    # JaSMin / demo de entrenamiento
    jasmin_epsilon: float = Field(default=1e-6, gt=0)
    measure_every: int = Field(default=25, ge=1)
    probe_count: int = Field(default=32, ge=1)

    # Logging
    log_level: str = "INFO"


settings = Settings()
