# core/catalog.py -> built-in experiment registry + spec loading
#
# config/experiments.json holds a `defaults` block and one named entry per
# built-in experiment. Sweep lists may use the shorthand "range:start:stop:step"
# (inclusive of both ends).

import json
from pathlib import Path
from typing import Any, Dict, List, Union

from pydantic import ValidationError

from core.errors import SpecValidationError
from models import ExperimentSpec

ROOT = Path(__file__).parent.parent
CATALOG_JSON = ROOT / "config" / "experiments.json"


def expand_range(value: Any) -> Any:
    if not (isinstance(value, str) and value.startswith("range:")):
        return value
    try:
        start, stop, step = (float(t) for t in value.split(":")[1:])
    except ValueError:
        raise SpecValidationError(f"bad range shorthand {value!r}; expected range:start:stop:step", ["sweep"])
    if step <= 0.0 or stop < start:
        raise SpecValidationError(f"empty or reversed range {value!r}", ["sweep"])
    n = int(round((stop - start) / step))
    # rounding keeps the grid on exact decimals (0.35, not 0.35000000000000003)
    return [round(start + i * step, 12) for i in range(n + 1)]


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def validate_spec(data: Dict[str, Any]) -> ExperimentSpec:
    """Build a spec from raw JSON data; every offending field is listed on failure."""
    data = dict(data)
    if isinstance(data.get("sweep"), dict):
        data["sweep"] = {k: expand_range(v) for k, v in data["sweep"].items()}
    try:
        return ExperimentSpec.model_validate(data)
    except ValidationError as e:
        fields = [".".join(str(p) for p in err["loc"]) for err in e.errors()]
        details = "; ".join(f"{f}: {err['msg']}" for f, err in zip(fields, e.errors()))
        raise SpecValidationError(f"invalid experiment spec ({details})", fields) from e


def load_catalog(path: Path = CATALOG_JSON) -> Dict[str, Dict[str, Any]]:
    raw = json.loads(Path(path).read_text())
    defaults = raw.get("defaults", {})
    return {name: _merge(defaults, {"name": name, **entry}) for name, entry in raw["experiments"].items()}


def list_experiments(path: Path = CATALOG_JSON) -> List[ExperimentSpec]:
    return [validate_spec(entry) for entry in load_catalog(path).values()]


def load_builtin(name: str, path: Path = CATALOG_JSON) -> ExperimentSpec:
    catalog = load_catalog(path)
    if name not in catalog:
        raise SpecValidationError(f"unknown built-in experiment {name!r}; available: {', '.join(catalog)}", ["name"])
    return validate_spec(catalog[name])


def load_spec_file(path: Union[str, Path]) -> ExperimentSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SpecValidationError(f"{path} is not valid JSON: {e}") from e
    return validate_spec(data)
