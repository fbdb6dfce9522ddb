"""Sectioned key=value pipeline configuration with full diagnostics.

The format is line oriented: `[section]` headers, `key = value` entries,
blank lines and '#' comments.  Validation never stops at the first problem;
every unknown section or key (with a closest-match suggestion), bad value,
and out-of-range number is collected with its line number and raised
together in one ConfigError.  Command-line overrides pass through the same
schema checks as file entries.
"""

from __future__ import annotations

import difflib
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .cleaning import FilterThresholds
from .errors import ConfigError
from .ingest import FORMATS
from .pretrain import GenerationConfig

STAGE_ORDER = ("strip", "langfilter", "dedup", "heuristics", "truecase")

_SECTION_RE = re.compile(r"^\[([^\]]*)\]$")

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}

# section -> key -> (kind, default); kind: str | int | float | bool | format
_SCHEMA: Dict[str, Dict[str, Tuple[str, object]]] = {
    "input": {
        "path": ("str", None),
        "format": ("format", "json-lines"),
    },
    "output": {
        "dir": ("str", "out"),
        "report": ("str", None),
    },
    "stages": {stage: ("bool", True) for stage in STAGE_ORDER},
    "filter": {
        "target_lang": ("str", "et"),
        "min_words": ("int", 10),
        "max_stopword_ratio": ("float", 0.6),
        "max_punct_ratio": ("float", 0.3),
        "lang_confidence_min": ("float", 0.95),
        "stopwords": ("str", None),
    },
    "truecase": {
        "lexicon": ("str", None),
    },
    "vocab": {
        "vocab_size": ("int", 50000),
    },
    "examples": {
        "max_seq_length": ("int", 128),
        "masked_lm_prob": ("float", 0.15),
        "random_next_prob": ("float", 0.5),
        "short_seq_prob": ("float", 0.1),
        "dupe_factor": ("int", 10),
        "shards": ("int", 4),
        "seed": ("int", 12345),
    },
}

# (section, key) -> inclusive numeric bounds
_RANGES: Dict[Tuple[str, str], Tuple[float, float]] = {
    ("filter", "min_words"): (1, float("inf")),
    ("filter", "max_stopword_ratio"): (0.0, 1.0),
    ("filter", "max_punct_ratio"): (0.0, 1.0),
    ("filter", "lang_confidence_min"): (0.0, 1.0),
    ("vocab", "vocab_size"): (6, float("inf")),
    ("examples", "max_seq_length"): (5, float("inf")),
    ("examples", "masked_lm_prob"): (0.0, 1.0),
    ("examples", "random_next_prob"): (0.0, 1.0),
    ("examples", "short_seq_prob"): (0.0, 1.0),
    ("examples", "dupe_factor"): (1, float("inf")),
    ("examples", "shards"): (1, float("inf")),
}


@dataclass(frozen=True)
class StageToggles:
    strip: bool = True
    langfilter: bool = True
    dedup: bool = True
    heuristics: bool = True
    truecase: bool = True

    def enabled(self) -> List[str]:
        """Enabled stage names in canonical pipeline order."""
        return [stage for stage in STAGE_ORDER if getattr(self, stage)]


@dataclass(frozen=True)
class PipelineConfig:
    input_path: str
    input_format: str = "json-lines"
    out_dir: str = "out"
    report_path: Optional[str] = None
    stages: StageToggles = StageToggles()
    target_lang: str = "et"
    thresholds: FilterThresholds = FilterThresholds()
    stopwords_path: Optional[str] = None
    truecase_lexicon_path: Optional[str] = None
    vocab_size: int = 50000
    generation: GenerationConfig = GenerationConfig()


def _suggest(word: str, options: List[str]) -> str:
    close = difflib.get_close_matches(word, options, n=1, cutoff=0.6)
    return f" (did you mean {close[0]!r}?)" if close else ""


def _convert(kind: str, raw: str) -> object:
    if kind == "str":
        return raw
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        lowered = raw.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "format":
        if raw not in FORMATS:
            raise ValueError(f"must be one of {', '.join(FORMATS)}")
        return raw
    raise AssertionError(kind)


def parse_config_text(
    text: str, overrides: Optional[Dict[Tuple[str, str], str]] = None
) -> PipelineConfig:
    """Parse and validate; raises ConfigError carrying every diagnostic."""
    diagnostics: List[str] = []
    values: Dict[Tuple[str, str], object] = {}
    section: Optional[str] = None
    all_keys = sorted({key for keys in _SCHEMA.values() for key in keys})

    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        header = _SECTION_RE.match(stripped)
        if header:
            name = header.group(1).strip()
            if name not in _SCHEMA:
                diagnostics.append(
                    f"line {line_no}: unknown section [{name}]"
                    + _suggest(name, list(_SCHEMA))
                )
                section = None
            else:
                section = name
            continue
        if "=" not in stripped:
            diagnostics.append(f"line {line_no}: expected key = value, got {stripped!r}")
            continue
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if section is None:
            diagnostics.append(f"line {line_no}: key {key!r} outside any known section")
            continue
        if key not in _SCHEMA[section]:
            pool = list(_SCHEMA[section]) + all_keys
            diagnostics.append(
                f"line {line_no}: unknown key {key!r} in [{section}]"
                + _suggest(key, pool)
            )
            continue
        kind, _default = _SCHEMA[section][key]
        try:
            value = _convert(kind, raw)
        except ValueError as exc:
            diagnostics.append(f"line {line_no}: bad value for {key}: {exc}")
            continue
        values[(section, key)] = value

    for (section_name, key), raw in (overrides or {}).items():
        if section_name not in _SCHEMA or key not in _SCHEMA[section_name]:
            diagnostics.append(f"override: unknown key {section_name}.{key}")
            continue
        kind, _default = _SCHEMA[section_name][key]
        try:
            values[(section_name, key)] = _convert(kind, str(raw))
        except ValueError as exc:
            diagnostics.append(f"override: bad value for {key}: {exc}")

    for (section_name, key), value in sorted(values.items()):
        bounds = _RANGES.get((section_name, key))
        if bounds and isinstance(value, (int, float)):
            low, high = bounds
            if not low <= value <= high:
                limit = f">= {low:g}" if high == float("inf") else f"in [{low:g}, {high:g}]"
                diagnostics.append(f"{section_name}.{key} must be {limit}, got {value:g}")

    def get(section_name: str, key: str) -> object:
        if (section_name, key) in values:
            return values[(section_name, key)]
        return _SCHEMA[section_name][key][1]

    if get("input", "path") is None:
        diagnostics.append("missing required key: input.path")

    if diagnostics:
        raise ConfigError(diagnostics)

    return PipelineConfig(
        input_path=str(get("input", "path")),
        input_format=str(get("input", "format")),
        out_dir=str(get("output", "dir")),
        report_path=(None if get("output", "report") is None else str(get("output", "report"))),
        stages=StageToggles(**{stage: bool(get("stages", stage)) for stage in STAGE_ORDER}),
        target_lang=str(get("filter", "target_lang")),
        thresholds=FilterThresholds(
            min_words=int(get("filter", "min_words")),
            max_stopword_ratio=float(get("filter", "max_stopword_ratio")),
            max_punct_ratio=float(get("filter", "max_punct_ratio")),
            lang_confidence_min=float(get("filter", "lang_confidence_min")),
        ),
        stopwords_path=(None if get("filter", "stopwords") is None else str(get("filter", "stopwords"))),
        truecase_lexicon_path=(
            None if get("truecase", "lexicon") is None else str(get("truecase", "lexicon"))
        ),
        vocab_size=int(get("vocab", "vocab_size")),
        generation=GenerationConfig(
            max_seq_length=int(get("examples", "max_seq_length")),
            masked_lm_prob=float(get("examples", "masked_lm_prob")),
            random_next_prob=float(get("examples", "random_next_prob")),
            short_seq_prob=float(get("examples", "short_seq_prob")),
            dupe_factor=int(get("examples", "dupe_factor")),
            shards=int(get("examples", "shards")),
            seed=int(get("examples", "seed")),
        ),
    )


def validate_config(
    path: str, overrides: Optional[Dict[Tuple[str, str], str]] = None
) -> PipelineConfig:
    """Read a config file and validate it; see parse_config_text."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError([f"cannot read config file: {exc}"]) from exc
    return parse_config_text(text, overrides)
