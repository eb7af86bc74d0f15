"""Command-line front end: config-driven runs with machine-readable output.

Subcommands: solve-aux, heisenberg, evolve, classify, metric, verify.
Every run is described by a single JSON config file; there is no positional
parameter alternative, so runs are reproducible.  Numeric output is printed
with 17 significant digits and identical configs produce byte-identical
files.

Exit status: 0 success, 2 config parse error, 3 domain/positivity error,
4 tolerance failure in verify.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import auxode, canon, oracle, propagator
from .errors import ConfigError, TdhoError
from .profiles import profile_from_config
from .serialize import dumps_json, format_csv, write_text

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_VERIFY = 4

VERIFY_DEFAULTS = {
    "det": 1e-8,
    "oracle": 1e-6,
    "gauge": 1e-6,
    "reduction": 1e-9,
    "wronskian": 1e-8,
    "residual": 1e-8,
    "fidelity": 1e-6,
    "moments": 1e-6,
}

SOLVER_DEFAULTS = {"rtol": auxode.DEFAULT_RTOL, "atol": auxode.DEFAULT_ATOL}


def _load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _parse_tolerances(pairs, config_tols):
    tols = {}
    if config_tols:
        if not isinstance(config_tols, dict):
            raise ConfigError("'tolerances' must be a mapping")
        tols.update({str(k): float(v) for k, v in config_tols.items()})
    for item in pairs or ():
        if "=" not in item:
            raise ConfigError(f"--tolerance expects NAME=VALUE, got {item!r}")
        name, _, value = item.partition("=")
        try:
            tols[name.strip()] = float(value)
        except ValueError as exc:
            raise ConfigError(f"--tolerance {item!r}: bad value") from exc
    return tols


def _section(cfg, name, required=True):
    sec = cfg.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"config is missing the '{name}' section")
        return {}
    if name == "profile" and isinstance(sec, str):
        return _load_config(sec)  # profile described in its own file
    if not isinstance(sec, dict):
        raise ConfigError(f"config section '{name}' must be a mapping")
    return sec


def _aux_params(cfg):
    aux = _section(cfg, "aux")
    try:
        return (aux.get("k_squared", 0), float(aux["chi0"]),
                float(aux.get("chidot0", 0.0)))
    except KeyError as exc:
        raise ConfigError(f"aux section is missing {exc}") from exc


def _time_grid(cfg):
    grid = _section(cfg, "time_grid")
    try:
        t_max = float(grid["t_max"])
    except KeyError:
        raise ConfigError("time_grid section needs 't_max'") from None
    samples = int(grid.get("samples", 101))
    if samples < 2:
        raise ConfigError("time_grid 'samples' must be >= 2")
    return t_max, np.linspace(0.0, t_max, samples)


def _meta(tols, seed, extra=None):
    meta = {f"tolerance.{k}": float(v) for k, v in sorted(tols.items())}
    meta["seed"] = seed
    if extra:
        meta.update(extra)
    return meta


def _solve(profile, cfg, tols):
    k2, chi0, chidot0 = _aux_params(cfg)
    t_max, ts = _time_grid(cfg)
    sol = auxode.solve_ermakov(
        profile, k2, chi0, chidot0, t_max,
        rtol=tols.get("rtol", SOLVER_DEFAULTS["rtol"]),
        atol=tols.get("atol", SOLVER_DEFAULTS["atol"]),
    )
    return sol, ts


def _emit_table(header, rows, meta, fmt):
    if fmt == "json":
        return dumps_json({"columns": list(header),
                           "rows": [list(r) for r in rows],
                           "meta": meta})
    return format_csv(header, rows, meta=meta)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_solve_aux(cfg, tols, seed, fmt):
    profile = profile_from_config(_section(cfg, "profile"))
    sol, ts = _solve(profile, cfg, tols)
    rows = [(float(t), sol.chi(t), sol.chi_dot(t)) for t in ts]
    meta = _meta({**SOLVER_DEFAULTS, **tols}, seed, {"k_squared": sol.k_squared})
    return _emit_table(("t", "chi", "chi_dot"), rows, meta, fmt), EXIT_OK


def cmd_heisenberg(cfg, tols, seed, fmt):
    profile = profile_from_config(_section(cfg, "profile"))
    sol, ts = _solve(profile, cfg, tols)
    rows = []
    for t in ts:
        smap = propagator.heisenberg_map(profile, sol, float(t))
        rows.append((float(t), smap.a, smap.b, smap.c, smap.d))
    meta = _meta({**SOLVER_DEFAULTS, **tols}, seed, {"k_squared": sol.k_squared})
    return _emit_table(("t", "a", "b", "c", "d"), rows, meta, fmt), EXIT_OK


def _state_from_config(cfg):
    sec = _section(cfg, "state")
    return propagator.GaussianState.pure(
        x0=float(sec.get("x0", 0.0)), p0=float(sec.get("p0", 0.0)),
        cov_xx=float(sec.get("cov_xx", 0.5)),
        cov_xp=float(sec.get("cov_xp", 0.0)),
    )


def cmd_evolve(cfg, tols, seed, fmt):
    profile = profile_from_config(_section(cfg, "profile"))
    state0 = _state_from_config(cfg)
    sol, ts = _solve(profile, cfg, tols)
    rows = []
    for t in ts:
        fact = propagator.factorize(profile, sol, float(t))
        smap = fact.induced_map()
        st = propagator.evolve_gaussian(fact, state0)
        rows.append((float(t), smap.a, smap.b, smap.c, smap.d,
                     st.mean_x, st.mean_p, st.cov_xx, st.cov_xp, st.cov_pp))
    meta = _meta({**SOLVER_DEFAULTS, **tols}, seed, {"k_squared": sol.k_squared})
    header = ("t", "a", "b", "c", "d", "mean_x", "mean_p",
              "cov_xx", "cov_xp", "cov_pp")
    return _emit_table(header, rows, meta, fmt), EXIT_OK


def cmd_classify(cfg, tols, seed, fmt):
    profile = profile_from_config(_section(cfg, "profile"))
    sec = _section(cfg, "classify", required=False)
    report = canon.classify(
        profile,
        n_samples=int(sec.get("samples", 401)),
        tol=tols.get("classify", 1e-9),
    )
    report["meta"] = _meta({"classify": 1e-9, **tols}, seed)
    return dumps_json(report), EXIT_OK


def cmd_metric(cfg, tols, seed, fmt):
    sec = _section(cfg, "metric")
    try:
        kind_name = sec["kind"]
    except KeyError:
        raise ConfigError("metric section needs 'kind'") from None
    if kind_name == "exponential":
        kind = canon.exponential(float(sec.get("lam", 1.0)))
    else:
        kind = canon.DiffeoKind(kind_name)
    eps = float(sec.get("eps", 0.0))
    xs = np.linspace(float(sec.get("x_min", -1.0)), float(sec.get("x_max", 1.0)),
                     int(sec.get("samples", 41)))
    rows = []
    for x in xs:
        x_prime, f2 = canon.diffeo_map(kind, eps, float(x))
        rows.append((float(x), x_prime, f2, f2 ** -2))
    meta = _meta(tols, seed, {"kind": kind_name, "eps": eps})
    return _emit_table(("x", "x_prime", "f2", "g"), rows, meta, fmt), EXIT_OK


# ---------------------------------------------------------------------------
# verify: the oracle suite
# ---------------------------------------------------------------------------

def _solve_windowed(profile, k2, chi0, chidot0, t_req, **kw):
    """Solve, shrinking to 90% of the positivity horizon when one is hit."""
    try:
        sol = auxode.solve_ermakov(profile, k2, chi0, chidot0, t_req, **kw)
        return sol, t_req
    except TdhoError as exc:
        if hasattr(exc, "t_star") and exc.partial is not None:
            t_hi = 0.9 * min(exc.t_star, exc.partial.t_max)
            return exc.partial, t_hi
        raise


def _verify_checks(profile, tols, seed):
    rng = np.random.default_rng(seed)
    t_dom = profile.domain[1]
    t_req = min(5.0, t_dom)
    checks = {}

    def record(name, err):
        thr = tols.get(name, VERIFY_DEFAULTS[name])
        checks[name] = {"max_error": float(err), "threshold": float(thr),
                        "pass": bool(err <= thr)}

    # symplectic determinant over random draws
    worst = 0.0
    for _ in range(100):
        k2 = int(rng.choice([-1, 0, 1]))
        chi0 = float(rng.uniform(0.5, 2.0))
        chidot0 = float(rng.uniform(-0.5, 0.5))
        t_i = float(rng.uniform(0.1, t_req))
        sol, t_hi = _solve_windowed(profile, k2, chi0, chidot0, t_i)
        smap = propagator.heisenberg_map(profile, sol, min(t_i, t_hi))
        worst = max(worst, abs(smap.det() - 1.0))
    record("det", worst)

    # closed-form map vs fundamental-matrix oracle (k^2 = 1 stays positive)
    sol, t_hi = _solve_windowed(profile, 1, 1.0, 0.0, t_req)
    fund = oracle.fundamental_matrix_dense(profile, t_hi)
    worst = 0.0
    for t in np.linspace(0.0, t_hi, 26):
        diff = (propagator.heisenberg_map(profile, sol, float(t)).as_matrix()
                - fund(float(t)).as_matrix())
        worst = max(worst, float(np.abs(diff).max()))
    record("oracle", worst)

    # gauge independence across the three k^2 branches
    sols = {}
    t_common = t_hi
    for k2 in (-1, 0, 1):
        s, t_k = _solve_windowed(profile, k2, 1.0, 0.0, t_hi)
        sols[k2] = s
        t_common = min(t_common, t_k)
    worst = 0.0
    for t in np.linspace(0.0, t_common, 11):
        maps = [propagator.heisenberg_map(profile, sols[k2], float(t)).as_matrix()
                for k2 in (-1, 0, 1)]
        worst = max(worst, float(np.abs(maps[0] - maps[1]).max()),
                    float(np.abs(maps[1] - maps[2]).max()))
    record("gauge", worst)

    # classical reduction: standardized stiffness vanishes on solutions
    sol0, t0_hi = _solve_windowed(profile, 0, 1.0, 0.0, t_req)
    worst = 0.0
    for t in np.linspace(0.0, 0.98 * t0_hi, 50):
        d = canon.DilatationParameter.from_solution(sol0, float(t))
        h = canon.QuadraticHamiltonian.oscillator(profile, float(t))
        h2 = canon.standardize(canon.dilatation_transform(h, d), d, profile)
        worst = max(worst, abs(h2.stiffness))
    record("reduction", worst)

    # wronskian conservation for a classical pair
    solb, tb_hi = _solve_windowed(profile, 0, 1.3, 0.4, t0_hi)
    t_w = min(t0_hi, tb_hi)
    w_ref = auxode.wronskian(profile, sol0, solb, 0.0)
    worst = 0.0
    for t in np.linspace(0.0, 0.98 * t_w, 40):
        worst = max(worst, abs(auxode.wronskian(profile, sol0, solb, float(t)) - w_ref))
    record("wronskian", worst)

    # dense-output residuals
    worst = 0.0
    for s, t_s in ((sol, t_hi), (sol0, t0_hi)):
        for t in np.linspace(1e-6, 0.98 * t_s, 200):
            worst = max(worst, abs(auxode.residual(profile, s, float(t))))
    record("residual", worst)

    # wavefunction-level factorization vs split-step oracle
    t_wave = min(2.0, t_hi)
    state = propagator.GaussianState.pure(x0=0.6, p0=0.0, cov_xx=0.4)
    fact = propagator.factorize(profile, sols[1], t_wave)
    evolved = propagator.evolve_gaussian(fact, state)
    span = 10.0 * max(1.0, np.sqrt(evolved.cov_xx), abs(evolved.mean_x))
    psi0 = oracle.from_gaussian(state, -span, span, 2048)
    steps = max(2000, int(4000 * t_wave))
    psi_t = oracle.grid_propagate(profile, psi0, t_wave, steps)
    psi_ref = oracle.from_gaussian(evolved, -span, span, 2048)
    record("fidelity", 1.0 - oracle.fidelity(psi_t, psi_ref))
    mom = oracle.moments(psi_t)
    target = (evolved.mean_x, evolved.mean_p, evolved.cov_xx,
              evolved.cov_xp, evolved.cov_pp)
    record("moments", max(abs(a - b) for a, b in zip(mom, target)))

    return checks


def cmd_verify(cfg, tols, seed, fmt):
    profile = profile_from_config(_section(cfg, "profile"))
    checks = _verify_checks(profile, tols, seed)
    all_pass = all(c["pass"] for c in checks.values())
    report = {"checks": checks, "all_pass": all_pass,
              "meta": _meta({**VERIFY_DEFAULTS, **tols}, seed)}
    return dumps_json(report), EXIT_OK if all_pass else EXIT_VERIFY


COMMANDS = {
    "solve-aux": cmd_solve_aux,
    "heisenberg": cmd_heisenberg,
    "evolve": cmd_evolve,
    "classify": cmd_classify,
    "metric": cmd_metric,
    "verify": cmd_verify,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tdho",
        description="Time-dependent oscillator engine: solvers, propagators, oracles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--tolerance", action="append", metavar="NAME=VALUE",
                       help="override a named tolerance (repeatable)")
        p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        tols = _parse_tolerances(args.tolerance, cfg.get("tolerances"))
        text, status = COMMANDS[args.command](cfg, tols, args.seed, args.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TdhoError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if args.out:
        write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
