from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Union

from src.core.validate import ValidationError

# Defaults for every evaluation run.
DEFAULT_N = 64
DEFAULT_N_PC = 50


@dataclass(frozen=True)
class RecognizerConfig:
    n: int = DEFAULT_N
    n_pc: int = DEFAULT_N_PC

    def __post_init__(self):
        if int(self.n) < 2:
            raise ValidationError(f"n must be >= 2, got {self.n}")
        if int(self.n_pc) < 1:
            raise ValidationError(f"nPC must be >= 1, got {self.n_pc}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "n_pc", int(self.n_pc))

    def to_dict(self) -> Dict[str, int]:
        return {"n": self.n, "n_pc": self.n_pc}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RecognizerConfig":
        n_pc = data.get("n_pc", data.get("nPC", DEFAULT_N_PC))
        return cls(n=int(data.get("n", DEFAULT_N)), n_pc=int(n_pc))


def load_json_config(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a flat JSON object of option overrides (used by `--config`)."""
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise ValidationError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}: invalid JSON ({e})") from e
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    return {str(k).replace("-", "_"): v for k, v in data.items()}
