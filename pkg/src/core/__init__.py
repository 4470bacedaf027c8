"""
Configuración compartida de OrquestaVerif.

Carga variables de entorno desde .env (python-dotenv) y expone las constantes
de configuración con prefijo ORQUESTA_. Los flags de la CLI tienen prioridad
sobre estas constantes, y éstas sobre los valores por defecto.

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

import os
import sys
import logging
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

# Cargar variables de entorno
load_dotenv()

logger = logging.getLogger(__name__)

# ============================================================================
# RUTAS
# ============================================================================

ROOT_DIR = Path(__file__).resolve().parent.parent.parent

DATA_DIR = Path(os.getenv("ORQUESTA_DATA_DIR", str(ROOT_DIR / "data")))
ARTIFACTS_DIR = Path(os.getenv("ORQUESTA_ARTIFACTS_DIR", "./artifacts"))

# ============================================================================
# VERIFICACIÓN
# ============================================================================

LOG_LEVEL = os.getenv("ORQUESTA_LOG_LEVEL", "INFO")
STATE_CAP = int(os.getenv("ORQUESTA_STATE_CAP", "50000000"))
SEARCH = os.getenv("ORQUESTA_SEARCH", "bfs")
STEPS_CAPACITY = int(os.getenv("ORQUESTA_STEPS_CAPACITY", "32"))

# ============================================================================
# SMC
# ============================================================================

JOBS = int(os.getenv("ORQUESTA_JOBS", "1"))
SEED = int(os.getenv("ORQUESTA_SEED", "0"))

# ============================================================================
# RUNTIME
# ============================================================================

SOCKET_DEADLINE = float(os.getenv("ORQUESTA_SOCKET_DEADLINE", "5.0"))
CONNECT_RETRY = float(os.getenv("ORQUESTA_CONNECT_RETRY", "5.0"))

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def configurar_logging(level: Optional[str] = None) -> None:
    """
    Configura el logging raíz hacia stderr.

    Args:
        level: Nivel de log (DEBUG, INFO, ...). Por defecto ORQUESTA_LOG_LEVEL.
    """
    logging.basicConfig(
        level=(level or LOG_LEVEL).upper(),
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def data_path(*parts: str) -> Path:
    """Ruta dentro del directorio de datos distribuidos."""
    return DATA_DIR.joinpath(*parts)


def artifacts_path(*parts: str) -> Path:
    """Ruta dentro del directorio de artefactos; crea el directorio si falta."""
    ARTIFACTS_DIR.mkdir(parents=True, exist_ok=True)
    return ARTIFACTS_DIR.joinpath(*parts)


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "ROOT_DIR",
    "DATA_DIR",
    "ARTIFACTS_DIR",
    "LOG_LEVEL",
    "STATE_CAP",
    "SEARCH",
    "STEPS_CAPACITY",
    "JOBS",
    "SEED",
    "SOCKET_DEADLINE",
    "CONNECT_RETRY",
    "LOG_FORMAT",
    "configurar_logging",
    "data_path",
    "artifacts_path",
]
