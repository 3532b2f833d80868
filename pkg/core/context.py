# core/context.py -> runner profile & per-run context
# Role: carries the desk-scale defaults from config/profiles.yaml and the
# bookkeeping of a single experiment run (seed streams, output paths, timing).
#
# Dependencies:
# config/profiles.yaml
# core/session.py (worker count, seed spawning)
#
# Inputs: ExperimentSpec (+ optional output override)
# Outputs: context object shared by strategy.py and loop.py

import time
import uuid
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from dotenv import load_dotenv

from core.session import resolve_workers, spawn_seeds
from models import ExperimentSpec

load_dotenv()

ROOT = Path(__file__).parent.parent
PROFILE_YAML = ROOT / "config" / "profiles.yaml"


class RunnerProfile:
    def __init__(self, config_path: Path = PROFILE_YAML):
        config = yaml.safe_load(Path(config_path).read_text())

        runner = config["runner"]
        self.name = runner.get("name", "splitrx")
        self.threads = int(runner.get("threads") or 0)
        self.chunk_size = int(runner["chunk_size"])
        self.output_dir = Path(runner.get("output_dir", "results"))

        self.mi_config: Dict[str, Any] = config["mi"]
        self.ser_config: Dict[str, Any] = config["ser"]
        self.log_level: str = config.get("logging", {}).get("level", "INFO")

    @property
    def workers(self) -> int:
        return resolve_workers(self.threads or None)

    def __repr__(self):
        return f"<RunnerProfile {self.name} workers={self.workers} chunk={self.chunk_size}>"


class ExperimentContext:
    def __init__(
        self,
        spec: ExperimentSpec,
        profile: Optional[RunnerProfile] = None,
        out_dir: Optional[Path] = None,
        workers: Optional[int] = None,
    ):
        self.spec = spec
        self.profile = profile or RunnerProfile()
        self.workers = resolve_workers(workers) if workers else self.profile.workers
        self.run_id = f"run-{int(time.time())}-{uuid.uuid4().hex[:6]}"
        self.started = time.perf_counter()

        if spec.output_path:
            csv_path = Path(spec.output_path)
            if out_dir is not None and not csv_path.is_absolute():
                csv_path = Path(out_dir) / csv_path.name
        else:
            csv_path = Path(out_dir or self.profile.output_dir) / f"{spec.name}.csv"
        self.csv_path = csv_path
        self.summary_path = csv_path.with_suffix(".summary.json")

    def point_seeds(self, n: int) -> List[int]:
        """One independent seed per grid point, derived from the spec seed only."""
        return spawn_seeds(self.spec.seed, n)

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.started

    def __repr__(self):
        return f"<ExperimentContext {self.spec.name} run_id={self.run_id}>"
