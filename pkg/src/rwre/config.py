"""Flat ``key = value`` run configuration.

Lines are ``section.name = value``; ``#`` starts a comment. Every problem in
a file is collected (with its line number) before :class:`ConfigError` is
raised, and the model-level invariants (ellipticity, law dimension, ...) are
checked here too so a bad run fails before any simulation starts.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

from .branching import CONVENTIONS, PATH_CAP
from .environment import EnvironmentLaw, build_law, uniform_law
from .errors import (ConfigError, EllipticityViolationError, InfeasibleEllipticityError, InvalidParameterError,
                     RwreError)
from .group_tree import GeneratorSet
from .regeneration import DEFAULT_DELTA, MODES
from .walk import SAMPLERS

__all__ = ["RunConfig", "parse_config", "load_config", "KEYS"]

ENV_KINDS = ("dirichlet_mixture", "finite_support", "uniform")


def _int(text: str) -> int:
    return int(text.strip(), 10)


def _float(text: str) -> float:
    return float(text)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(","))


def _vectors(text: str) -> tuple[tuple[float, ...], ...]:
    return tuple(_floats(v) for v in text.split(";") if v.strip())


def _str(text: str) -> str:
    if not text:
        raise ValueError("empty value")
    return text


def _uint64(text: str) -> int:
    v = _int(text)
    if not 0 <= v < 2**64:
        raise InvalidParameterError(f"{v} is not an unsigned 64-bit integer")
    return v


def _choice(options) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return parse


def _at_least(lo: int) -> Callable[[str], int]:
    def parse(text: str) -> int:
        v = _int(text)
        if v < lo:
            raise InvalidParameterError(f"must be >= {lo}, got {v}")
        return v
    return parse


# key -> (parser, default); a default of ... marks a required key
KEYS: dict[str, tuple[Callable[[str], Any], Any]] = {
    "group.k": (_at_least(0), ...),
    "group.r": (_at_least(0), ...),
    "env.kind": (_choice(ENV_KINDS), ...),
    "env.epsilon": (_float, None),
    "env.alpha": (_floats, None),
    "env.vectors": (_vectors, None),
    "env.weights": (_floats, None),
    "seed.master": (_uint64, ...),
    "walk.n_steps": (_at_least(0), 10_000),
    "walk.n_traj": (_at_least(1), 100),
    "walk.sampler": (_choice(tuple(SAMPLERS)), "categorical"),
    "regen.mode": (_choice(tuple(MODES)), "strict"),
    "regen.delta": (_at_least(1), DEFAULT_DELTA),
    "regen.include_first_block": (_bool, False),
    "branching.psi": (_at_least(1), 2),
    "branching.mc_samples": (_at_least(1), 1000),
    "branching.convention": (_choice(CONVENTIONS), "descendant"),
    "output.dir": (_str, "rwre-out"),
    "output.dump_trajectory": (_bool, False),
    "parallel.workers": (_at_least(1), 1),
}

# keys that do not change any result, left out of the config hash
_UNHASHED = ("output.", "parallel.")


@dataclass(frozen=True)
class RunConfig:
    k: int
    r: int
    env_kind: str
    epsilon: float | None
    alpha: tuple | None
    vectors: tuple | None
    weights: tuple | None
    master_seed: int
    n_steps: int = 10_000
    n_traj: int = 100
    sampler: str = "categorical"
    mode: str = "strict"
    delta: int = DEFAULT_DELTA
    include_first_block: bool = False
    psi: int = 2
    mc_samples: int = 1000
    convention: str = "descendant"
    output_dir: str = "rwre-out"
    dump_trajectory: bool = False
    workers: int = 1
    values: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def group(self) -> GeneratorSet:
        return GeneratorSet(self.k, self.r)

    @property
    def d(self) -> int:
        return 2 * self.k + self.r

    @property
    def law(self) -> EnvironmentLaw:
        return _law(self.env_kind, self.epsilon, self.alpha, self.vectors, self.weights, self.d)

    @property
    def sha256(self) -> str:
        """Hash of every result-affecting setting, in canonical form."""
        canon = {k: v for k, v in sorted(self.values.items()) if not k.startswith(_UNHASHED)}
        return hashlib.sha256(json.dumps(canon, sort_keys=True).encode()).hexdigest()

    def replace(self, **changes) -> RunConfig:
        data = {k: v for k, v in asdict(self).items() if k != "values"}
        data.update(changes)
        return RunConfig(**data, values=self.values)


def _law(kind, epsilon, alpha, vectors, weights, d) -> EnvironmentLaw:
    if kind == "uniform":
        return uniform_law(d, epsilon)
    spec = {"kind": kind, "epsilon": epsilon, "alpha": alpha, "vectors": vectors, "weights": weights}
    return build_law(spec, d)


_FIELD_OF = {
    "group.k": "k", "group.r": "r", "env.kind": "env_kind", "env.epsilon": "epsilon",
    "env.alpha": "alpha", "env.vectors": "vectors", "env.weights": "weights", "seed.master": "master_seed",
    "walk.n_steps": "n_steps", "walk.n_traj": "n_traj", "walk.sampler": "sampler", "regen.mode": "mode",
    "regen.delta": "delta", "regen.include_first_block": "include_first_block", "branching.psi": "psi",
    "branching.mc_samples": "mc_samples", "branching.convention": "convention", "output.dir": "output_dir",
    "output.dump_trajectory": "dump_trajectory", "parallel.workers": "workers",
}


def parse_config(text: str) -> RunConfig:
    """Parse and validate; raises ConfigError listing every problem."""
    errors: list[str] = []
    values: dict[str, Any] = {}
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if key in seen:
            errors.append(f"line {lineno}: duplicate key {key!r} (first set on line {seen[key]})")
            continue
        seen[key] = lineno
        if key not in KEYS:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        try:
            values[key] = KEYS[key][0](value)
        except InvalidParameterError as exc:
            errors.append(f"line {lineno}: {key}: invalid value: {exc}")
        except ValueError as exc:
            errors.append(f"line {lineno}: {key}: type mismatch: {exc}")

    for key, (_, default) in KEYS.items():
        if key in values or key in seen:
            continue
        if default is ...:
            errors.append(f"missing required key {key!r}")
        else:
            values[key] = default

    def where(key: str) -> str:
        return f"line {seen[key]}: " if key in seen else ""

    if "group.k" in values and "group.r" in values:
        try:
            GeneratorSet(values["group.k"], values["group.r"])
        except RwreError as exc:
            errors.append(f"{where('group.r')}group: {exc}")
        else:
            _check_law(values, where, errors)
            _check_branching(values, where, errors)
    if errors:
        raise ConfigError(errors)
    return RunConfig(**{_FIELD_OF[k]: v for k, v in values.items()}, values=values)


def _check_law(values, where, errors) -> None:
    kind = values.get("env.kind")
    if kind is None:
        return
    d = 2 * values["group.k"] + values["group.r"]
    needs = {"dirichlet_mixture": "env.alpha", "finite_support": "env.vectors"}.get(kind)
    if kind != "uniform" and values.get("env.epsilon") is None:
        errors.append(f"{where('env.kind')}env.epsilon is required for kind {kind}")
        return
    if needs and values.get(needs) is None:
        errors.append(f"{where('env.kind')}{needs} is required for kind {kind}")
        return
    try:
        _law(kind, values.get("env.epsilon"), values.get("env.alpha"), values.get("env.vectors"),
             values.get("env.weights"), d)
    except RwreError as exc:
        key = "env.epsilon" if isinstance(exc, (InfeasibleEllipticityError, EllipticityViolationError)) else "env.kind"
        errors.append(f"{where(key)}{type(exc).__name__}: {exc}")


def _check_branching(values, where, errors) -> None:
    d = 2 * values["group.k"] + values["group.r"]
    psi = values.get("branching.psi")
    if psi is not None and (d - 1) ** psi > PATH_CAP:
        errors.append(f"{where('branching.psi')}TooLargePsiError: (d-1)^psi = {(d - 1) ** psi} exceeds {PATH_CAP}")


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
