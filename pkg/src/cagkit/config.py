"""Declarative pipeline configuration (one JSON file, flags override)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from cagkit.errors import ConfigError

DEFAULT_SELECTION = {"policy": "per_video_best"}


@dataclass
class PipelineConfig:
    workdir: Path = Path("out")
    inputs: list = field(default_factory=list)
    window_radius: int = 2
    min_gap: int = 5
    predictor: dict = field(default_factory=dict)
    selection: dict = field(default_factory=lambda: dict(DEFAULT_SELECTION))
    granularity: str = "video"
    ratios: tuple = (0.8, 0.1, 0.1)
    seed: int = 0
    reports_path: str = ""
    summaries_path: str = ""
    generated_path: str = ""
    embeddings: list = field(default_factory=list)
    c_constants: dict = field(default_factory=dict)
    normalize_embeddings: bool = False
    expect_unit_norm: bool = False
    service: dict = field(default_factory=dict)
    workers: int = 1

    def artifact(self, name: str) -> Path:
        return Path(self.workdir) / name


def load_config(path) -> PipelineConfig:
    """Parse and validate a pipeline config file.

    Relative paths inside the file resolve against the file's directory, so
    a config plus its fixtures stays relocatable as one unit.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    base = path.parent

    def resolve(p: str) -> str:
        return str((base / p) if not Path(p).is_absolute() else Path(p))

    cfg = PipelineConfig()
    cfg.workdir = Path(resolve(str(raw.get("workdir", "out"))))
    cfg.inputs = [resolve(str(p)) for p in raw.get("inputs", [])]

    sampler = raw.get("sampler", {})
    cfg.window_radius = int(sampler.get("window_radius", 2))
    cfg.min_gap = int(sampler.get("min_gap", 5))
    if cfg.min_gap < 1:
        raise ConfigError(f"sampler.min_gap must be >= 1, got {cfg.min_gap}")
    if cfg.window_radius < 1:
        raise ConfigError(f"sampler.window_radius must be >= 1, got {cfg.window_radius}")

    predictor = dict(raw.get("predictor", {}))
    if predictor:
        kind = predictor.get("kind")
        if kind not in ("stub", "process"):
            raise ConfigError(f"predictor.kind must be stub or process, got {kind!r}")
        if kind == "stub":
            if not predictor.get("truth"):
                raise ConfigError("stub predictor needs a truth file path")
            predictor["truth"] = resolve(str(predictor["truth"]))
        if kind == "process" and not predictor.get("command"):
            raise ConfigError("process predictor needs a command list")
    cfg.predictor = predictor

    selection = dict(raw.get("selection", DEFAULT_SELECTION))
    policy = selection.get("policy")
    if policy not in ("top_k", "per_video_best", "threshold"):
        raise ConfigError(f"unknown selection.policy {policy!r}")
    cfg.selection = selection

    split = raw.get("split", {})
    cfg.granularity = str(split.get("granularity", "video"))
    if cfg.granularity not in ("video", "exam"):
        raise ConfigError(f"split.granularity must be video or exam, got {cfg.granularity!r}")
    ratios = split.get("ratios", [0.8, 0.1, 0.1])
    try:
        cfg.ratios = tuple(float(r) for r in ratios)
    except (TypeError, ValueError):
        raise ConfigError(f"split.ratios must be numbers, got {ratios!r}") from None
    if len(cfg.ratios) != 3 or any(r <= 0 for r in cfg.ratios):
        raise ConfigError(f"split.ratios must be three positive numbers, got {ratios!r}")
    if abs(sum(cfg.ratios) - 1.0) > 1e-9:
        raise ConfigError(f"split.ratios must sum to 1, got {sum(cfg.ratios)}")
    cfg.seed = int(split.get("seed", 0))

    corpus = raw.get("corpus", {})
    cfg.reports_path = resolve(str(corpus["reports"])) if corpus.get("reports") else ""
    cfg.summaries_path = resolve(str(corpus["summaries"])) if corpus.get("summaries") else ""
    cfg.generated_path = resolve(str(corpus["generated"])) if corpus.get("generated") else ""

    vls = raw.get("vlscore", {})
    cfg.embeddings = []
    for entry in vls.get("embeddings", []):
        if "path" not in entry:
            raise ConfigError("vlscore.embeddings entries need a path")
        cfg.embeddings.append(
            {
                "path": resolve(str(entry["path"])),
                "format": entry.get("format", "auto"),
                "model_id": str(entry.get("model_id", "default")),
                "backbone_id": str(entry.get("backbone_id", "default")),
            }
        )
    cfg.c_constants = {str(k): float(v) for k, v in (vls.get("C") or {}).items()}
    for backbone, value in cfg.c_constants.items():
        if value <= 0:
            raise ConfigError(f"vlscore.C[{backbone!r}] must be > 0, got {value}")
    cfg.normalize_embeddings = bool(vls.get("normalize", False))
    cfg.expect_unit_norm = bool(vls.get("expect_unit_norm", False))

    service = dict(raw.get("service", {}))
    for key in ("store", "frame_root", "corpus", "split_manifest"):
        if service.get(key):
            service[key] = resolve(str(service[key]))
    cfg.service = service

    cfg.workers = int(raw.get("workers", 1))
    if cfg.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {cfg.workers}")

    _check_paths_exist(cfg)
    return cfg


def _check_paths_exist(cfg: PipelineConfig) -> None:
    missing = [p for p in cfg.inputs if not Path(p).exists()]
    if cfg.predictor.get("kind") == "stub" and cfg.predictor.get("truth"):
        if not Path(cfg.predictor["truth"]).exists():
            missing.append(cfg.predictor["truth"])
    for p in (cfg.reports_path, cfg.summaries_path, cfg.generated_path):
        if p and not Path(p).exists():
            missing.append(p)
    for entry in cfg.embeddings:
        if not Path(entry["path"]).exists():
            missing.append(entry["path"])
    if missing:
        raise ConfigError(f"referenced paths do not exist: {', '.join(sorted(missing))}")
