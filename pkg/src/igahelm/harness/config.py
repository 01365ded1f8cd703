"""Experiment configuration and the mapping from solver tags to specs.

Configs are TOML files::

    [experiment]
    name = "table3"
    problem = "MP1B"
    k = [100, 1000, 10000]
    p = [1, 2, 3, 4, 5]
    kh = 0.625
    tol = 1e-7
    max_it = 100
    max_n = 200000            # runs above this size are recorded as skipped

    [problem_options]         # forwarded to the problem factory
    robin_edges = []

    [[preconditioner]]
    tag = "D_eps"
    epsilon = 0.15

    [[preconditioner]]
    tag = "C_ex"
    beta2 = "1/k"

Setting ``n_elements = [8, 16, 32]`` in ``[experiment]`` sweeps fixed meshes
instead of deriving the mesh from ``kh``.

Every ``[[preconditioner]]`` entry may restrict itself to some orders with
``p = [...]`` and may override ``cycles``, ``nu``, ``omega``, ``beta2``,
``epsilon`` and ``shift``.
"""
from __future__ import annotations

import hashlib
import json
import re
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..precond.cslp import CslpSpec
from ..precond.deflation import DEFAULT_EPSILON, DeflationSpec

TAGS = ("none", "D", "D_eps", "C_ex", "C_MG", "DC_MG", "Deps_C_MG")

# default CSLP shift per (tag family, dimension)
_BETA2_DEFAULTS = {("exact", 1): "1/k", ("exact", 2): "1/(3k)", ("mg", 1): 1.0, ("mg", 2): 4.2}


def parse_beta2(value, k: float) -> float:
    """Shift from a number or an expression ``"c"``, ``"c/k"`` or ``"1/(ck)"``."""
    if isinstance(value, (int, float)):
        return float(value)
    s = str(value).replace(" ", "").replace("*", "")
    m = re.fullmatch(r"([0-9.eE+-]+)", s)
    if m:
        return float(m.group(1))
    m = re.fullmatch(r"([0-9.eE+-]*)/k", s)
    if m:
        return float(m.group(1) or 1.0) / k
    m = re.fullmatch(r"([0-9.eE+-]*)/\(([0-9.eE+-]*)k\)", s)
    if m:
        return float(m.group(1) or 1.0) / (float(m.group(2) or 1.0) * k)
    raise ValueError(f"cannot parse shift {value!r}")


@dataclass(frozen=True)
class PreconditionerConfig:
    tag: str
    epsilon: float | None = None
    beta2: float | str | None = None
    cycles: int = 1
    nu: int = 1
    omega: float = 0.6
    shift: str = "mass"
    p: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown preconditioner tag {self.tag!r}; expected one of {TAGS}")

    def applies_to(self, p: int) -> bool:
        return self.p is None or p in self.p

    def specs(self, k: float, dim: int) -> tuple[DeflationSpec | None, CslpSpec | None]:
        """The (deflation, CSLP) pair this tag stands for."""
        tag = self.tag
        defl = None
        if tag in ("D", "DC_MG"):
            defl = DeflationSpec(0.0 if self.epsilon is None else self.epsilon)
        elif tag in ("D_eps", "Deps_C_MG"):
            defl = DeflationSpec(DEFAULT_EPSILON if self.epsilon is None else self.epsilon)
        cslp = None
        if tag == "C_ex":
            b = self.beta2 if self.beta2 is not None else _BETA2_DEFAULTS[("exact", dim)]
            cslp = CslpSpec(parse_beta2(b, k), "exact", shift=self.shift)
        elif tag in ("C_MG", "DC_MG", "Deps_C_MG"):
            b = self.beta2 if self.beta2 is not None else _BETA2_DEFAULTS[("mg", dim)]
            cslp = CslpSpec(parse_beta2(b, k), "vcycles", self.cycles, self.nu, self.omega,
                            self.shift)
        return defl, cslp

    def label(self) -> str:
        """Tag with the cycle count for multigrid variants, e.g. ``DC_MG^12``."""
        return f"{self.tag}^{self.cycles}" if "MG" in self.tag else self.tag

    def snapshot(self, k: float, dim: int) -> dict:
        defl, cslp = self.specs(k, dim)
        out = {"tag": self.tag, "label": self.label()}
        if defl is not None:
            out["epsilon"] = defl.epsilon
        if cslp is not None:
            out.update(beta2=cslp.beta2, inversion=cslp.inversion, shift=cslp.shift)
            if cslp.inversion == "vcycles":
                out.update(cycles=cslp.cycles, nu=cslp.nu, omega=cslp.omega)
        return out


@dataclass
class ExperimentConfig:
    name: str
    problem: str
    k: list[float]
    p: list[int]
    preconditioners: list[PreconditionerConfig]
    kh: float = 0.625
    tol: float = 1e-7
    max_it: int = 100
    max_n: int | None = None
    problem_options: dict = field(default_factory=dict)
    formulation: str = "corrected"
    n_elements: list[int] | None = None   # fixed meshes instead of the kh rule

    def to_dict(self) -> dict:
        d = asdict(self)
        d["preconditioners"] = [
            {key: val for key, val in asdict(pc).items() if val is not None}
            for pc in self.preconditioners
        ]
        return d

    def digest(self) -> str:
        return config_hash(self.to_dict())


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _precond_from_dict(d: dict) -> PreconditionerConfig:
    d = dict(d)
    if "p" in d and d["p"] is not None:
        d["p"] = tuple(int(v) for v in d["p"])
    known = set(PreconditionerConfig.__dataclass_fields__)
    extra = set(d) - known
    if extra:
        raise ValueError(f"unknown preconditioner keys {sorted(extra)}")
    return PreconditionerConfig(**d)


def config_from_dict(data: dict) -> ExperimentConfig:
    exp = dict(data.get("experiment", data))
    pcs = data.get("preconditioner", exp.pop("preconditioners", None))
    exp.pop("preconditioner", None)
    if not pcs:
        raise ValueError("config needs at least one [[preconditioner]] entry")
    opts = data.get("problem_options", exp.pop("problem_options", {})) or {}
    for key in ("name", "problem", "k", "p"):
        if key not in exp:
            raise ValueError(f"config is missing experiment.{key}")
    k = exp.pop("k")
    p = exp.pop("p")
    return ExperimentConfig(
        k=[float(v) for v in (k if isinstance(k, list) else [k])],
        p=[int(v) for v in (p if isinstance(p, list) else [p])],
        preconditioners=[_precond_from_dict(pc) for pc in pcs],
        problem_options=dict(opts),
        **exp,
    )


def load_config(path) -> ExperimentConfig:
    with Path(path).open("rb") as fh:
        return config_from_dict(tomllib.load(fh))
