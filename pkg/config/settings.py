"""
Process-level settings for the simulator.

Values come from the environment (optionally a ``.env`` file loaded by
python-dotenv). Per-experiment parameters live in run config files, see
``utils/validators.py``.
"""

import os

from dotenv import load_dotenv

load_dotenv()


class Settings:
    """Simulator settings with environment overrides"""

    # Logging
    LOG_LEVEL: str = os.getenv("VQAA_LOG_LEVEL", "INFO").upper()

    # Worker pool size for independent jobs (grid points, trajectories)
    WORKERS: int = int(os.getenv("VQAA_WORKERS", "1"))

    # MPS truncation defaults
    CHI_MAX: int = int(os.getenv("VQAA_CHI_MAX", "64"))
    SVD_CUTOFF: float = float(os.getenv("VQAA_SVD_CUTOFF", "1e-10"))

    # Largest chain handled by dense diagonalization / statevector evolution
    DENSE_MAX_SITES: int = int(os.getenv("VQAA_DENSE_MAX_SITES", "14"))

    # Relative norm loss that triggers a warning
    NORM_WARNING: float = float(os.getenv("VQAA_NORM_WARNING", "0.01"))

    # Outputs
    OUTPUT_DIR: str = os.getenv("VQAA_OUTPUT_DIR", "runs")
    DEFAULT_SEED: int = int(os.getenv("VQAA_DEFAULT_SEED", "1234"))

    # DMRG
    DMRG_MAX_BOND: int = int(os.getenv("VQAA_DMRG_MAX_BOND", "64"))
    DMRG_SWEEPS: int = int(os.getenv("VQAA_DMRG_SWEEPS", "20"))
    DMRG_TOL: float = float(os.getenv("VQAA_DMRG_TOL", "1e-10"))

    @classmethod
    def as_dict(cls) -> dict:
        """Snapshot of the settings for run manifests"""
        return {
            key: getattr(cls, key)
            for key in dir(cls)
            if key.isupper() and not key.startswith("_")
        }


# Create global settings instance
settings = Settings()


# Environment variable template for .env file
ENV_TEMPLATE = """
# Logging
VQAA_LOG_LEVEL=INFO

# Parallel jobs
VQAA_WORKERS=1

# MPS truncation
VQAA_CHI_MAX=64
VQAA_SVD_CUTOFF=1e-10

# Dense oracle cap (sites)
VQAA_DENSE_MAX_SITES=14

# Norm loss warning threshold
VQAA_NORM_WARNING=0.01

# Outputs
VQAA_OUTPUT_DIR=runs
VQAA_DEFAULT_SEED=1234

# DMRG
VQAA_DMRG_MAX_BOND=64
VQAA_DMRG_SWEEPS=20
VQAA_DMRG_TOL=1e-10
"""
