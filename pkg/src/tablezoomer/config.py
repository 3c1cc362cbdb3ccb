"""Application configuration: one declarative INI document, strictly validated.

Precedence, highest first: CLI override > environment variable > config file
> built-in default. Environment variables follow the pattern
``TABLEZOOMER_<SECTION>_<KEY>`` (e.g. ``TABLEZOOMER_REACT_K_MAX=3``).
Unknown sections or keys fail fast.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError

ENV_PREFIX = "TABLEZOOMER"


@dataclass
class LlmSection:
    mode: str = "live"  # live | replay | scripted
    endpoint_url: str = "http://localhost:8000/v1"
    model: str = "default"
    api_key_env: str = "TABLEZOOMER_API_KEY"
    max_tokens: int = 32768
    temperature: float = 0.0
    parallelism: int = 2
    fixture_dir: str = ""  # replay mode
    script_path: str = ""  # scripted mode: JSON file with a list of responses


@dataclass
class DescriberSection:
    k: int = 3
    j: int = 2
    seed: int = 0
    cache_dir: str = ".schema_cache"


@dataclass
class RefinerSection:
    threshold: float = 0.6
    max_candidates: int = 5
    k_zoom: int = 6


@dataclass
class CodegenSection:
    max_repairs: int = 2


@dataclass
class ExecutorSection:
    timeout: float = 30.0
    runner_path: str = ""


@dataclass
class ReactSection:
    k_max: int = 5


@dataclass
class HarnessSection:
    adapter: str = "generic_jsonl"
    report_dir: str = "reports"


@dataclass
class AppConfig:
    llm: LlmSection = field(default_factory=LlmSection)
    describer: DescriberSection = field(default_factory=DescriberSection)
    refiner: RefinerSection = field(default_factory=RefinerSection)
    codegen: CodegenSection = field(default_factory=CodegenSection)
    executor: ExecutorSection = field(default_factory=ExecutorSection)
    react: ReactSection = field(default_factory=ReactSection)
    harness: HarnessSection = field(default_factory=HarnessSection)

    def validate(self) -> "AppConfig":
        if self.llm.mode not in ("live", "replay", "scripted"):
            raise ConfigError(f"llm.mode must be live/replay/scripted, got {self.llm.mode!r}")
        if self.llm.max_tokens <= 0:
            raise ConfigError("llm.max_tokens must be positive")
        if not 0.0 <= self.llm.temperature <= 2.0:
            raise ConfigError("llm.temperature must be in [0, 2]")
        if self.llm.parallelism < 1:
            raise ConfigError("llm.parallelism must be >= 1")
        if self.describer.k < 0 or self.describer.j < 0:
            raise ConfigError("describer.k and describer.j must be non-negative")
        if not 0.0 < self.refiner.threshold <= 1.0:
            raise ConfigError("refiner.threshold must be in (0, 1]")
        if self.refiner.max_candidates < 1:
            raise ConfigError("refiner.max_candidates must be >= 1")
        if self.refiner.k_zoom <= self.describer.k:
            raise ConfigError("refiner.k_zoom must exceed describer.k")
        if self.codegen.max_repairs < 0:
            raise ConfigError("codegen.max_repairs must be >= 0")
        if self.executor.timeout <= 0:
            raise ConfigError("executor.timeout must be positive")
        if self.react.k_max < 1:
            raise ConfigError("react.k_max must be >= 1")
        if self.harness.adapter not in ("generic_jsonl", "databench", "tablebench", "wikitableqa"):
            raise ConfigError(f"harness.adapter unknown: {self.harness.adapter!r}")
        return self


_SECTION_TYPES = {f.name: f.default_factory for f in fields(AppConfig)}


def _convert(raw: str, target_type: type, where: str):
    if target_type is bool:
        token = raw.strip().lower()
        if token in ("1", "true", "yes", "on"):
            return True
        if token in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{where}: not a boolean: {raw!r}")
    try:
        return target_type(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: cannot parse {raw!r} as {target_type.__name__}")


def _apply(config: AppConfig, section: str, key: str, raw: str, origin: str) -> None:
    if section not in _SECTION_TYPES:
        raise ConfigError(f"{origin}: unknown section [{section}]")
    target = getattr(config, section)
    section_fields = {f.name: f.type for f in fields(target)}
    if key not in section_fields:
        raise ConfigError(f"{origin}: unknown key {section}.{key}")
    current = getattr(target, key)
    setattr(target, key, _convert(raw, type(current), f"{origin}: {section}.{key}"))


def load_config(
    path: str | Path | None = None,
    *,
    env: dict[str, str] | None = None,
    overrides: dict[str, str] | None = None,
) -> AppConfig:
    """Assemble the configuration with CLI > env > file > default precedence.

    `overrides` maps dotted keys ("react.k_max") to raw string values, which
    is exactly what the CLI's repeated --set flag produces.
    """
    config = AppConfig()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser()
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}")
        for section in parser.sections():
            for key, raw in parser.items(section):
                _apply(config, section, key, raw, str(path))

    env = os.environ if env is None else env
    for section_name in _SECTION_TYPES:
        target = getattr(config, section_name)
        for f in fields(target):
            env_key = f"{ENV_PREFIX}_{section_name.upper()}_{f.name.upper()}"
            if env_key in env:
                _apply(config, section_name, f.name, env[env_key], f"env {env_key}")

    for dotted, raw in (overrides or {}).items():
        if "." not in dotted:
            raise ConfigError(f"override {dotted!r} must look like section.key")
        section, key = dotted.split(".", 1)
        _apply(config, section, key, raw, f"--set {dotted}")

    return config.validate()
