"""Experiment configuration: flat INI-style sections, scalars and vectors.

Example::

    [model]
    type = sir_cev
    mu = 0.05, 0.06
    sigma = 0.2, 0.32
    beta = -0.2, -0.3
    rho = 1 0.25 0.2; 0.25 1 0.3; 0.2 0.3 1
    r0 = 0.02
    kappa_p = 1.0
    theta_p = 0.02
    sigma_r = 0.02
    kappa_q = 1.0
    theta_q = 0.025
    s0 = 1, 2
    T = 5

    [strategy]
    delta = 0.2, 0.6, 0.1
    x0 = 1.0

    [copula]
    kind = coin
    u_star = 0.25

    [risk]
    family = tvar
    alpha = 0.1

    [solver]
    eps2 = 1e-3
    grid = 1000
    paths = 100000
    seed = 2

The solver section carries either ``eps``/``eps2`` or the tolerance pair
``m_lower``/``s_upper``, never both.  Optional bandwidth overrides:
``h_delta``, ``h_sdf``, ``h_x``, ``h_v``.  A ``[report]`` section may list
``eps2`` values, named risk sections (``[risk:NAME]``) and
``include_benchmark`` for table-shaped aggregation runs.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .copulas import CopulaSpec
from .errors import ParameterError
from .market import GbmParams, SirCevParams, Strategy

__all__ = ["SolverSettings", "ReportSettings", "ExperimentConfig", "load_config"]

_RISK_KEYS = {
    "tvar": ("alpha",),
    "ute": ("beta",),
    "alpha_beta": ("alpha", "beta", "p"),
    "inverse_s": ("q",),
}


def _vector(text: str) -> np.ndarray:
    return np.array([float(tok) for tok in text.replace(",", " ").split()])


def _matrix(text: str) -> np.ndarray:
    return np.array([[float(tok) for tok in row.replace(",", " ").split()]
                     for row in text.split(";")])


@dataclass(frozen=True)
class SolverSettings:
    eps: Optional[float]
    m_lower: Optional[float]
    s_upper: Optional[float]
    grid: int
    n_paths: int
    n_steps: Optional[int]
    seed: int
    bandwidths: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ReportSettings:
    eps2: tuple
    families: tuple          # (name, family, params) triples
    include_benchmark: bool


@dataclass(frozen=True)
class ExperimentConfig:
    model_type: str
    model: object            # GbmParams | SirCevParams
    strategy: Strategy
    copula: CopulaSpec
    risk_family: str
    risk_params: dict
    solver: SolverSettings
    report: Optional[ReportSettings]
    source: str

    def resolved(self) -> dict:
        """Flat echo of everything that determines the run."""
        model = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                 for k, v in vars(self.model).items()}
        out = {
            "model_type": self.model_type,
            "model": model,
            "strategy": {"delta": self.strategy.delta.tolist(),
                         "x0": self.strategy.x0},
            "copula": self.copula.describe(),
            "risk": {"family": self.risk_family, **self.risk_params},
            "solver": {
                "eps": self.solver.eps,
                "m_lower": self.solver.m_lower,
                "s_upper": self.solver.s_upper,
                "grid": self.solver.grid,
                "paths": self.solver.n_paths,
                "steps": self.solver.n_steps,
                "seed": self.solver.seed,
                "bandwidth_overrides": dict(self.solver.bandwidths),
            },
            "source": self.source,
        }
        return out


def _parse_model(cp: configparser.ConfigParser):
    sec = cp["model"]
    kind = sec.get("type", "").strip().lower()
    if kind == "gbm":
        model = GbmParams(
            mu=_vector(sec["mu"]),
            sigma=_vector(sec["sigma"]),
            rho=_matrix(sec["rho"]),
            r=sec.getfloat("r"),
            s0=_vector(sec["s0"]),
            T=sec.getfloat("t"),
        )
    elif kind == "sir_cev":
        model = SirCevParams(
            mu=_vector(sec["mu"]),
            sigma=_vector(sec["sigma"]),
            beta=_vector(sec["beta"]),
            rho=_matrix(sec["rho"]),
            r0=sec.getfloat("r0"),
            kappaP=sec.getfloat("kappa_p"),
            thetaP=sec.getfloat("theta_p"),
            sigma_r=sec.getfloat("sigma_r"),
            kappaQ=sec.getfloat("kappa_q"),
            thetaQ=sec.getfloat("theta_q"),
            s0=_vector(sec["s0"]),
            T=sec.getfloat("t"),
        )
    else:
        raise ParameterError(f"model type must be gbm or sir_cev, got {kind!r}")
    return kind, model


def _parse_copula(cp: configparser.ConfigParser) -> CopulaSpec:
    sec = cp["copula"]
    kind = sec.get("kind", "").strip().lower()
    kwargs = {}
    if sec.get("u_star") is not None:
        kwargs["u_star"] = sec.getfloat("u_star")
    if sec.get("theta") is not None:
        kwargs["theta"] = sec.getfloat("theta")
    return CopulaSpec(kind, **kwargs)


def _parse_risk(sec) -> tuple:
    family = sec.get("family", "").strip().lower()
    if family not in _RISK_KEYS:
        raise ParameterError(f"unknown risk family {family!r}")
    params = {}
    for key in _RISK_KEYS[family]:
        if sec.get(key) is None:
            raise ParameterError(f"risk family {family!r} needs key {key!r}")
        params[key] = sec.getfloat(key)
    return family, params


def _parse_solver(cp: configparser.ConfigParser) -> SolverSettings:
    sec = cp["solver"]
    eps = sec.getfloat("eps") if sec.get("eps") is not None else None
    if sec.get("eps2") is not None:
        if eps is not None:
            raise ParameterError("give eps or eps2, not both")
        eps = float(np.sqrt(sec.getfloat("eps2")))
    m_lower = sec.getfloat("m_lower") if sec.get("m_lower") is not None else None
    s_upper = sec.getfloat("s_upper") if sec.get("s_upper") is not None else None
    if (m_lower is None) != (s_upper is None):
        raise ParameterError("m_lower and s_upper must be given together")
    if (eps is not None) == (m_lower is not None):
        raise ParameterError(
            "the solver section needs exactly one of eps/eps2 or the "
            "tolerance pair m_lower/s_upper"
        )
    bandwidths = {}
    for key in ("h_delta", "h_sdf", "h_x", "h_v"):
        if sec.get(key) is not None:
            bandwidths[key] = sec.getfloat(key)
    return SolverSettings(
        eps=eps,
        m_lower=m_lower,
        s_upper=s_upper,
        grid=sec.getint("grid", fallback=1000),
        n_paths=sec.getint("paths", fallback=100_000),
        n_steps=sec.getint("steps") if sec.get("steps") is not None else None,
        seed=sec.getint("seed", fallback=0),
        bandwidths=bandwidths,
    )


def _parse_report(cp: configparser.ConfigParser) -> Optional[ReportSettings]:
    if not cp.has_section("report"):
        return None
    sec = cp["report"]
    eps2 = tuple(float(t) for t in sec.get("eps2", "").replace(",", " ").split())
    names = [t for t in sec.get("families", "").replace(",", " ").split()]
    families = []
    for name in names:
        section = f"risk:{name}"
        if not cp.has_section(section):
            raise ParameterError(f"report family {name!r} has no [{section}]")
        family, params = _parse_risk(cp[section])
        families.append((name, family, params))
    return ReportSettings(
        eps2=eps2,
        families=tuple(families),
        include_benchmark=sec.getboolean("include_benchmark", fallback=False),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ParameterError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.read(path)
    try:
        model_type, model = _parse_model(cp)
        strategy = Strategy(delta=_vector(cp["strategy"]["delta"]),
                            x0=cp["strategy"].getfloat("x0"))
        copula = _parse_copula(cp)
        risk_family, risk_params = _parse_risk(cp["risk"])
        solver = _parse_solver(cp)
    except (KeyError, configparser.Error, ValueError) as exc:
        raise ParameterError(f"bad config {path}: {exc}") from exc
    if strategy.delta.size != model.n_assets:
        raise ParameterError("strategy delta must cover every risky asset")
    return ExperimentConfig(
        model_type=model_type,
        model=model,
        strategy=strategy,
        copula=copula,
        risk_family=risk_family,
        risk_params=risk_params,
        solver=solver,
        report=_parse_report(cp),
        source=str(path),
    )
