"""
Parámetros del sistema (SystemParams).

Validados con pydantic y cargables desde un archivo plano clave=valor con las
14 claves del protocolo. Los presets distribuidos viven en data/presets.

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

import hashlib
import logging
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.core import data_path
from src.core.errors import InvalidParams
from src.model.protocol import Configuration

logger = logging.getLogger(__name__)


class Variant(str, Enum):
    FIXED = "fixed"
    COMMITTED_SENDS = "committed_sends"
    WAIT_ALL_CHOICES = "wait_all_choices"


class TimeoutMode(str, Enum):
    OFF = "off"
    NONDET = "nondet"


class ConfigMode(BaseModel):
    """Nondeterministic (orc elige al inicio) o Fixed(orc, per_service)."""

    model_config = ConfigDict(frozen=True)

    nondeterministic: bool = True
    orc: Optional[Configuration] = None
    per_service: Tuple[Configuration, ...] = ()

    @classmethod
    def parse(cls, text: str) -> "ConfigMode":
        text = text.strip()
        if text.lower() == "nondeterministic":
            return cls()
        if not text.lower().startswith("fixed:"):
            raise InvalidParams(f"config_mode inválido: {text!r}")
        body = text[len("fixed:"):]
        try:
            orc_text, services_text = body.split(";", 1)
        except ValueError:
            raise InvalidParams(f"config_mode fijo requiere 'orc;svc0,svc1,...': {text!r}") from None
        services = tuple(Configuration.parse(p) for p in services_text.split(",") if p.strip())
        return cls(nondeterministic=False, orc=Configuration.parse(orc_text), per_service=services)

    @classmethod
    def fixed(cls, orc: Configuration, per_service: Iterable[Configuration]) -> "ConfigMode":
        return cls(nondeterministic=False, orc=orc, per_service=tuple(per_service))

    def __str__(self) -> str:
        if self.nondeterministic:
            return "nondeterministic"
        return f"fixed:{self.orc};" + ",".join(str(c) for c in self.per_service)


class SystemParams(BaseModel):
    """Todos los parámetros ajustables del modelo."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_services: int = Field(gt=0)
    queue_size: int = Field(gt=0)
    timeout: int = Field(default=15, gt=0)
    write_rate: float = Field(default=5.0, gt=0)
    read_rate: float = Field(default=5.0, gt=0)
    p_stop: int = Field(default=25, ge=0)
    p_choice: int = Field(default=1, ge=0)
    p_nochoice: int = Field(default=1, ge=0)
    p_action: int = Field(default=75, ge=0)
    p_offer: int = Field(default=1, ge=0)
    p_match: int = Field(default=1, ge=0)
    config_mode: ConfigMode = Field(default_factory=ConfigMode)
    variant: Variant = Variant.FIXED
    timeout_mode: TimeoutMode = TimeoutMode.OFF

    @field_validator("config_mode", mode="before")
    @classmethod
    def _parse_config_mode(cls, value):
        if isinstance(value, str):
            return ConfigMode.parse(value)
        return value

    @model_validator(mode="after")
    def _check_weights(self) -> "SystemParams":
        if self.p_choice + self.p_nochoice <= 0:
            raise ValueError("p_choice + p_nochoice debe ser > 0")
        if self.p_action + self.p_stop <= 0:
            raise ValueError("p_action + p_stop debe ser > 0")
        if self.p_offer + self.p_match <= 0:
            raise ValueError("p_offer + p_match debe ser > 0")
        if self.n_services == 1 and self.p_offer <= 0:
            raise ValueError("con un solo servicio no hay match posible: p_offer debe ser > 0")
        mode = self.config_mode
        if not mode.nondeterministic and len(mode.per_service) != self.n_services:
            raise ValueError(
                f"config_mode fijo define {len(mode.per_service)} servicios, se esperaban {self.n_services}"
            )
        return self

    def to_text(self) -> str:
        """Serializa al formato clave=valor."""
        lines = []
        for key in PARAM_KEYS:
            value = getattr(self, key)
            if isinstance(value, Enum):
                value = value.value
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()[:12]

    def with_overrides(self, overrides: Dict[str, str]) -> "SystemParams":
        data = {key: getattr(self, key) for key in PARAM_KEYS}
        data.update(overrides)
        return build_params(data)


PARAM_KEYS = (
    "n_services", "queue_size", "timeout", "write_rate", "read_rate",
    "p_stop", "p_choice", "p_nochoice", "p_action", "p_offer", "p_match",
    "config_mode", "variant", "timeout_mode",
)


def build_params(data: Dict[str, object]) -> SystemParams:
    """
    Construye y valida SystemParams.

    Raises:
        InvalidParams: Si alguna invariante de los parámetros no se cumple
    """
    try:
        return SystemParams(**data)
    except ValidationError as e:
        errores = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'params'}: {err['msg']}" for err in e.errors()
        )
        raise InvalidParams(errores) from None
    except InvalidParams:
        raise


def parse_params(text: str) -> SystemParams:
    """Parsea el formato plano clave=valor."""
    data: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParams(f"línea {number}: se esperaba clave=valor")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in PARAM_KEYS:
            raise InvalidParams(f"línea {number}: clave desconocida {key!r}")
        data[key] = value
    return build_params(data)


def parse_overrides(items: Iterable[str]) -> Dict[str, str]:
    overrides: Dict[str, str] = {}
    for item in items:
        if "=" not in item:
            raise InvalidParams(f"override inválido {item!r}; use clave=valor")
        key, value = (p.strip() for p in item.split("=", 1))
        if key not in PARAM_KEYS:
            raise InvalidParams(f"clave desconocida {key!r}")
        overrides[key] = value
    return overrides


# Nombres alternativos de los presets de estimación y de escala
PRESET_ALIASES: Dict[str, str] = {
    "paper-smc": "smc-default",
    "paper-c1": "scale-c1",
    "paper-c2": "scale-c2",
}


def list_presets() -> List[str]:
    return sorted([p.stem for p in data_path("presets").glob("*.params")] + list(PRESET_ALIASES))


def load_params(source: Union[str, Path], overrides: Optional[Dict[str, str]] = None) -> SystemParams:
    """
    Carga parámetros desde un archivo o un nombre de preset.

    Args:
        source: Ruta a un archivo .params o nombre de preset (p. ej. 'desk-small')
        overrides: Valores clave=valor aplicados encima

    Returns:
        SystemParams validados
    """
    path = Path(source)
    if not path.exists():
        name = PRESET_ALIASES.get(str(source), str(source))
        preset = data_path("presets", f"{name}.params")
        if not preset.exists():
            raise InvalidParams(
                f"no existe el archivo ni el preset {str(source)!r} (presets: {', '.join(list_presets())})"
            )
        path = preset
    params = parse_params(path.read_text(encoding="utf-8"))
    if overrides:
        params = params.with_overrides(overrides)
    logger.debug(f"Parámetros cargados de {path}: {params.digest()}")
    return params


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "Variant",
    "TimeoutMode",
    "ConfigMode",
    "SystemParams",
    "PARAM_KEYS",
    "build_params",
    "parse_params",
    "parse_overrides",
    "PRESET_ALIASES",
    "list_presets",
    "load_params",
]
