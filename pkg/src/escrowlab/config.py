"""Scenario configuration files.

A config is plain ``key = value`` text; ``#`` starts a comment. Example::

    id = s2_3_classical_extortion
    variant = classical
    x = 100
    alice_policy = RATIONAL
    bob_policy = EXTORT_CLASSICAL
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .escrow import EscrowProtocol, make_protocol
from .ledger import OrderingPolicy

POLICY_KINDS = ("HONEST", "RATIONAL", "PUNITIVE", "EXTORT_CLASSICAL", "EXTORT_COMMIT_LEAK",
                "EXTORT_HASHBOUND", "EXTORT_GENERAL")
ORDERINGS = {"bob-first": OrderingPolicy.bob_first, "alice-first": OrderingPolicy.alice_first}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class ScenarioConfig:
    id: str = "custom"
    anchor: str = ""
    variant: str = "classical"
    x: int = 100
    deposit_variant: str = "standard"
    ordering: str = "bob-first"
    phase1_end: int = 2
    delivery_deadline: int = 4
    commit_end: int = 7
    phase3_end: int = 10
    guess_window: bool = False
    alice_policy: str = "RATIONAL"
    bob_policy: str = "HONEST"
    escrow_script: str = ""
    mirror_script: str = ""
    good_value: int = 0
    unlock_delay: int = 1
    extra_rounds: int = 3
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.x, bool) or not isinstance(self.x, int) or self.x <= 0:
            raise ConfigError("x must be a positive integer")
        for key in ("alice_policy", "bob_policy"):
            if getattr(self, key) not in POLICY_KINDS:
                raise ConfigError(f"{key} must be one of {', '.join(POLICY_KINDS)}")
        if self.ordering not in ORDERINGS:
            raise ConfigError(f"ordering must be one of {', '.join(ORDERINGS)}")
        if self.unlock_delay < 1:
            raise ConfigError("unlock_delay must be at least 1 (t' > t)")
        if self.extra_rounds < self.unlock_delay + 1:
            raise ConfigError("extra_rounds must leave room to settle auxiliary contracts")
        if self.good_value < 0:
            raise ConfigError("good_value must be non-negative")
        self.protocol()  # validates variant, deadlines and deposit variant

    def protocol(self) -> EscrowProtocol:
        params = dict(x=self.x, phase1_end=self.phase1_end,
                      delivery_deadline=self.delivery_deadline, phase3_end=self.phase3_end,
                      deposit_variant=self.deposit_variant)
        if self.variant == "commit-reveal":
            params.update(commit_end=self.commit_end, guess_window=self.guess_window)
        try:
            return make_protocol(self.variant, **params)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None

    def ordering_policy(self) -> OrderingPolicy:
        return ORDERINGS[self.ordering]()

    @property
    def horizon(self) -> int:
        return self.phase3_end + self.extra_rounds

    def replace(self, **changes) -> ScenarioConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_text(self) -> str:
        return "".join(f"{k} = {_format(v)}\n" for k, v in self.to_dict().items())


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _coerce(name: str, typ, raw: str):
    if typ in (bool, "bool"):
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    if typ in (int, "int"):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{name}: expected an integer, got {raw!r}") from None
    return raw


def parse_config(text: str, **overrides) -> ScenarioConfig:
    """Parse key = value text into a validated :class:`ScenarioConfig`.

    Raises:
        ConfigError: on unknown keys, bad values or failed validation.
    """
    types = {f.name: f.type for f in fields(ScenarioConfig)}
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _coerce(key, types[key], raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ScenarioConfig(**values)


def load_config(path: str | os.PathLike, **overrides) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from None
    return parse_config(text, **overrides)


def fixtures_dir() -> Path:
    """Bundled scenario configs, overridable with ``ESCROWLAB_FIXTURES``."""
    env = os.environ.get("ESCROWLAB_FIXTURES")
    return Path(env) if env else Path(__file__).parent / "fixtures"


def list_fixtures() -> list[str]:
    return sorted(p.stem for p in fixtures_dir().glob("*.cfg"))


def resolve_config_path(name: str | os.PathLike) -> Path:
    """Accept a path, or a fixture name with or without ``.cfg``."""
    p = Path(name)
    if p.exists():
        return p
    stem = p.name[:-4] if p.name.endswith(".cfg") else p.name
    candidate = fixtures_dir() / f"{stem}.cfg"
    if (p.parent == Path(".") or p.parent.name == "fixtures") and candidate.exists():
        return candidate
    return p


def load_fixture(name: str, **overrides) -> ScenarioConfig:
    return load_config(resolve_config_path(name), **overrides)
