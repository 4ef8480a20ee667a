"""
Run directory writer.

Tables go to CSV through pandas, schedules and traces to JSON through
pydantic, and ``finalize`` writes one ``manifest.json`` that references every
file exactly once.
"""

import json
import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel

from config import __version__
from config.settings import settings
from enums import Backend
from schemas import RunManifest
from utils.error_handler import SimulationError

logger = logging.getLogger("vqaa.outputs")

MANIFEST_NAME = "manifest.json"

Rows = Union[pd.DataFrame, Sequence[Dict[str, Any]]]


class RunOutputs:
    """Collects the files of one command run under ``out_dir``."""

    def __init__(self, out_dir: Optional[str], command: str):
        self.command = command
        self.out_dir = Path(out_dir or settings.OUTPUT_DIR)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.files: Dict[str, str] = {}
        self.started = time.perf_counter()

    def _register(self, key: str, filename: str) -> Path:
        if key in self.files or filename in self.files.values():
            raise SimulationError(f"Output '{key}' ({filename}) written twice", "DUPLICATE_OUTPUT")
        self.files[key] = filename
        return self.out_dir / filename

    def write_csv(self, key: str, rows: Rows, filename: Optional[str] = None) -> Path:
        frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
        path = self._register(key, filename or f"{key}.csv")
        frame.to_csv(path, index=False)
        logger.info(f"Wrote {len(frame)} rows to {path}")
        return path

    def write_json(self, key: str, model: Union[BaseModel, Dict[str, Any]], filename: Optional[str] = None) -> Path:
        path = self._register(key, filename or f"{key}.json")
        if isinstance(model, BaseModel):
            path.write_text(model.model_dump_json(indent=2))
        else:
            path.write_text(json.dumps(model, indent=2))
        logger.info(f"Wrote {path}")
        return path

    def finalize(
        self,
        config: BaseModel,
        seed: int,
        backend: Backend,
        evaluation_count: int = 0,
        measurement_count: int = 0,
        flags: Optional[List[str]] = None,
    ) -> RunManifest:
        """Write ``manifest.json`` and return it."""
        manifest = RunManifest(
            command=self.command,
            config=config.model_dump(mode="json"),
            seed=seed,
            version=__version__,
            backend=backend,
            outputs=dict(self.files),
            wall_clock_seconds=time.perf_counter() - self.started,
            evaluation_count=evaluation_count,
            measurement_count=measurement_count,
            flags=sorted(set(flags or [])),
            settings=settings.as_dict(),
        )
        (self.out_dir / MANIFEST_NAME).write_text(manifest.model_dump_json(indent=2))
        logger.info(f"Run manifest written to {self.out_dir / MANIFEST_NAME}")
        return manifest
