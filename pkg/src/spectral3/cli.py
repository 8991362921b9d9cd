"""Batch command-line surface: spectral3 forward | inverse | roundtrip |
stability | verify.

Each subcommand wraps one pipeline stage and writes plot-ready files
(CSV tables, 17-significant-digit JSON).  No interactive mode.  Exit
codes map onto the solver error taxonomy:

    0  success
    1  file or parse problem (bad CSV row, unreadable JSON, bad flags)
    2  eigenvalue search or other solver failure (index context in the
       message)
    3  singular main-equation system
    4  admissibility violation (model collides with data, or the input
       data itself fails validation and --force was not given)
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import forward as _forward_mod
from .asympt import extract_remainders, validate_condition1
from .errors import (AdmissibilityViolationError, SingularSystemError,
                     Spectral3Error)
from .forward import (SpectralData, compute_spectral_data,
                      load_spectral_data, save_spectral_data)
from .grid import (Grid, l2_norm, read_coefficients, resample,
                   w2m1_distance, write_coefficients, CoefficientPair)
from .inverse import (ReconstructionResult, run_inverse,
                      stability_experiment, verify_reconstruction)
from .selfadjoint import check_symmetry
from .serialize import dumps17

__all__ = ["main", "RunConfig"]


@dataclass
class RunConfig:
    """Validated numeric configuration shared by the subcommands."""

    grid_m: int = 512
    n_max: int | None = None
    big_n: int | None = None
    newton_tol: float | None = None
    pair_tol: float | None = None
    pole_tol: float | None = None
    threads: int = 1

    def __post_init__(self):
        if self.grid_m % 2 != 0 or self.grid_m < 64:
            raise ValueError("grid size must be even and at least 64")
        if (self.big_n is not None and self.n_max is not None
                and self.big_n > self.n_max):
            raise ValueError("truncation N=%d exceeds available n_max=%d"
                             % (self.big_n, self.n_max))
        if self.threads < 1:
            raise ValueError("threads must be at least 1")

    @property
    def grid(self) -> Grid:
        return Grid(self.grid_m)

    def apply_tolerances(self) -> None:
        # Advanced knobs: the search and pole tolerances live as module
        # constants; a batch process owns them for its lifetime.
        if self.newton_tol is not None:
            _forward_mod._NEWTON_TOL = float(self.newton_tol)
        if self.pole_tol is not None:
            _forward_mod._POLE_TOL = float(self.pole_tol)
        if self.pair_tol is None:
            self.pair_tol = _forward_mod._PAIR_TOL


# ---------------------------------------------------------------------------
# Helpers


def _jsonable(obj):
    """Strip numpy scalar types so dumps17 can render the object."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return [z.real, z.imag]
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def _load_coeffs(path, grid: Grid) -> CoefficientPair:
    pair = read_coefficients(path)
    if pair.grid.M != grid.M:
        pair = CoefficientPair(resample(pair.tau1, grid),
                               resample(pair.sigma0, grid))
    return pair


def _write_rows(path, header: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if row.get(h) is None
                             else ("%.17g" % row[h]
                                   if isinstance(row[h], float) else row[h])
                             for h in header])


def _parse_perturb(spec: str):
    """'beta:1,1' -> (1, 1, 'beta')."""
    try:
        which, idx = spec.split(":")
        n_s, k_s = idx.split(",")
        n, k = int(n_s), int(k_s)
    except ValueError:
        raise ValueError("bad --perturb spec %r, expected 'beta:n,k' or "
                         "'lambda:n,k'" % spec) from None
    if which not in ("lambda", "beta"):
        raise ValueError("bad --perturb field %r" % which)
    return (n, k, which)


def _is_selfadjoint_class(coeffs: CoefficientPair) -> bool:
    t1, s0 = coeffs.tau1.values, coeffs.sigma0.values
    return (np.abs(t1.imag).max() <= 1e-12 * (1.0 + np.abs(t1).max())
            and np.abs(s0.real).max() <= 1e-12 * (1.0 + np.abs(s0).max()))


def _validate_input_data(data: SpectralData) -> dict:
    """Gate the inverse run on the structural data clauses."""
    report = validate_condition1(data)
    structural = ("distinct_within_family", "pairing", "beta_product_on_K",
                  "gamma_nonzero")
    bad = [name for name in structural
           if not report["clauses"][name]["pass"]]
    if bad:
        offenders = {name: report["clauses"][name]["offenders"]
                     for name in bad}
        raise AdmissibilityViolationError(
            0, "input spectral data failed validation: %s "
               "(rerun with --force to bypass)" % offenders)
    return report


# ---------------------------------------------------------------------------
# Subcommands


def cmd_forward(args) -> int:
    cfg = RunConfig(grid_m=args.grid, n_max=args.n_max, threads=args.threads,
                    newton_tol=args.newton_tol, pair_tol=args.pair_tol,
                    pole_tol=args.pole_tol)
    cfg.apply_tolerances()
    coeffs = _load_coeffs(args.coeffs, cfg.grid)
    data = compute_spectral_data(coeffs, cfg.n_max, pair_tol=cfg.pair_tol)
    frame = extract_remainders(data)
    diag = {
        "asymptotics": {
            "kappa_abs": np.abs(frame.kappa),
            "kappa1_abs": np.abs(frame.kappa1),
            "tail_max": frame.tail_max,
            "decay_slope": frame.decay_slope,
        },
        "validation": validate_condition1(data),
    }
    if _is_selfadjoint_class(coeffs):
        diag["symmetry"] = check_symmetry(data)
    data.diagnostics = _jsonable(diag)
    save_spectral_data(args.out, data)
    print("forward: wrote %s (n_max=%d, K=%s, theta=%.6g%+.6gj)"
          % (args.out, data.n_max, data.K, data.theta.real, data.theta.imag))
    if "symmetry" in diag:
        print("forward: self-adjoint symmetry report: %s"
              % ("pass" if diag["symmetry"]["pass"] else "FAIL"))
    return 0


def cmd_inverse(args) -> int:
    data = load_spectral_data(args.data)
    cfg = RunConfig(grid_m=args.grid, big_n=args.big_n, n_max=data.n_max,
                    threads=args.threads, newton_tol=args.newton_tol,
                    pair_tol=args.pair_tol, pole_tol=args.pole_tol)
    cfg.apply_tolerances()
    if not args.force:
        _validate_input_data(data)
    res = run_inverse(data, cfg.grid, args.big_n,
                      theta_shift=args.model_jitter)
    res.diagnostics.pop("cache", None)
    write_coefficients(args.out, res.coeffs)
    print("inverse: wrote %s (N=%d, d=%.6g, rcond_min=%.3g)"
          % (args.out, args.big_n, res.diagnostics.get("d", float("nan")),
             res.diagnostics.get("rcond_min", float("nan"))))
    if args.diag:
        with open(args.diag, "w") as fh:
            fh.write(dumps17(_jsonable(res.diagnostics)))
        print("inverse: diagnostics in %s" % args.diag)
    return 0


def cmd_roundtrip(args) -> int:
    Ns = sorted(int(t) for t in str(args.big_n).split(","))
    cfg = RunConfig(grid_m=args.grid, n_max=Ns[-1], big_n=Ns[-1],
                    threads=args.threads, newton_tol=args.newton_tol,
                    pair_tol=args.pair_tol, pole_tol=args.pole_tol)
    cfg.apply_tolerances()
    coeffs = _load_coeffs(args.coeffs, cfg.grid)
    data = compute_spectral_data(coeffs, Ns[-1], pair_tol=cfg.pair_tol)

    def one(N: int) -> dict:
        res = run_inverse(data, cfg.grid, N)
        rec = compute_spectral_data(res.coeffs, N, pair_tol=cfg.pair_tol)
        lam_err = beta_err = 0.0
        for n in range(1, N + 1):
            for k in (1, 2):
                lam_err = max(lam_err, abs(rec.lam(n, k) - data.lam(n, k))
                              / (1.0 + abs(data.lam(n, k))))
                beta_err = max(beta_err, abs(rec.beta(n, k) - data.beta(n, k))
                               / (1.0 + abs(data.beta(n, k))))
        return {"N": N,
                "max_rel_lambda_err": lam_err,
                "max_rel_beta_err": beta_err,
                "tau1_l2": l2_norm(res.tau1N - coeffs.tau1),
                "sigma0_w2m1": w2m1_distance(res.sigma0N, coeffs.sigma0)}

    if cfg.threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            rows = list(pool.map(one, Ns))
    else:
        rows = [one(N) for N in Ns]
    header = ["N", "max_rel_lambda_err", "max_rel_beta_err",
              "tau1_l2", "sigma0_w2m1"]
    _write_rows(args.out, header, rows)
    print("roundtrip: wrote %s" % args.out)
    for row in rows:
        print("  N=%2d  lambda %.3e  beta %.3e  tau1_L2 %.3e  sigma0_W2m1 %.3e"
              % (row["N"], row["max_rel_lambda_err"], row["max_rel_beta_err"],
                 row["tau1_l2"], row["sigma0_w2m1"]))
    return 0


def cmd_stability(args) -> int:
    data = load_spectral_data(args.data)
    N = args.big_n if args.big_n is not None else data.n_max
    cfg = RunConfig(grid_m=args.grid, big_n=N, n_max=data.n_max,
                    threads=args.threads, newton_tol=args.newton_tol,
                    pair_tol=args.pair_tol, pole_tol=args.pole_tol)
    cfg.apply_tolerances()
    entries = tuple(_parse_perturb(s) for s in (args.perturb or ["beta:1,1"]))
    deltas = ([float(t) for t in args.deltas.split(",")]
              if args.deltas else None)
    rows = stability_experiment(data, cfg.grid, N, entries=entries,
                                deltas=deltas, threads=cfg.threads)
    header = ["delta", "d", "tau1_l2", "sigma0_w2m1",
              "tau1_ratio", "sigma0_ratio", "status"]
    _write_rows(args.out, header, rows)
    print("stability: wrote %s (%d rows, N=%d)" % (args.out, len(rows), N))
    for row in rows[1:]:
        ratio = row["tau1_ratio"]
        print("  delta=%.3e  d=%.3e  tau1 ratio %s  [%s]"
              % (row["delta"], row["d"],
                 "%.4f" % ratio if ratio is not None else "-", row["status"]))
    return 0


def cmd_verify(args) -> int:
    data = load_spectral_data(args.data)
    N = args.big_n if args.big_n is not None else data.n_max
    cfg = RunConfig(grid_m=args.grid, big_n=N, n_max=data.n_max,
                    threads=args.threads, newton_tol=args.newton_tol,
                    pair_tol=args.pair_tol, pole_tol=args.pole_tol)
    cfg.apply_tolerances()
    if args.mode == "spectral":
        if not args.rec:
            raise ValueError("--rec is required for mode=spectral")
        coeffs = _load_coeffs(args.rec, cfg.grid)
        thin = ReconstructionResult(coeffs.tau1, coeffs.sigma0,
                                    None, None, [])
        report = verify_reconstruction(thin, data, N, mode="spectral",
                                       rtol=args.rtol)
    else:
        res = run_inverse(data, cfg.grid, N)
        cache = res.diagnostics.pop("cache")
        report = verify_reconstruction(res, data, N, mode="weyl",
                                       cache=cache)
    with open(args.out, "w") as fh:
        fh.write(dumps17(_jsonable(report)))
    print("verify(%s): %s -> %s" % (args.mode,
                                    "pass" if report["pass"] else "FAIL",
                                    args.out))
    return 0


# ---------------------------------------------------------------------------
# Parser and config plumbing


class _Parser(argparse.ArgumentParser):
    # Bad flags are a parse problem: exit 1, matching the file-error code.
    def error(self, message):
        self.exit(1, "%s: error: %s\n" % (self.prog, message))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid", type=int, default=512,
                   help="number of grid intervals M (even, >= 64)")
    p.add_argument("--threads", type=int, default=1,
                   help="cap on data-parallel thread width")
    p.add_argument("--config", default=None, help=argparse.SUPPRESS)
    p.add_argument("--newton-tol", type=float, default=None,
                   help="eigenvalue Newton stopping tolerance")
    p.add_argument("--pair-tol", type=float, default=None,
                   help="coinciding-eigenvalue detection tolerance")
    p.add_argument("--pole-tol", type=float, default=None,
                   help="Weyl-function pole proximity guard")


def _build_parser() -> _Parser:
    parser = _Parser(prog="spectral3",
                     description="Forward and inverse spectral solver for "
                                 "the third-order operator with a "
                                 "distributional coefficient.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forward", parents=[], help="coefficients -> spectral data")
    p.add_argument("--coeffs", required=True, help="coefficient CSV")
    p.add_argument("--n-max", type=int, required=True,
                   help="number of index pairs per family")
    _add_common(p)
    p.add_argument("--out", required=True, help="output spectral-data JSON")
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("inverse", help="spectral data -> coefficients")
    p.add_argument("--data", required=True, help="spectral-data JSON")
    p.add_argument("--big-n", type=int, required=True,
                   help="truncation order N of the main system")
    _add_common(p)
    p.add_argument("--out", required=True, help="output coefficient CSV")
    p.add_argument("--diag", default=None, help="diagnostics JSON path")
    p.add_argument("--model-jitter", type=float, default=0.0,
                   help="shift the model mean to dodge eigenvalue collisions")
    p.add_argument("--force", action="store_true",
                   help="skip input-data validation")
    p.set_defaults(func=cmd_inverse)

    p = sub.add_parser("roundtrip", help="forward -> inverse -> forward table")
    p.add_argument("--coeffs", required=True, help="coefficient CSV")
    p.add_argument("--big-n", required=True,
                   help="comma-separated truncation orders, e.g. 8,12,16")
    _add_common(p)
    p.add_argument("--out", required=True, help="summary CSV")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("stability", help="perturbation ladder experiment")
    p.add_argument("--data", required=True, help="spectral-data JSON")
    p.add_argument("--perturb", action="append", default=None,
                   help="entry to perturb, e.g. beta:1,1 (repeatable)")
    p.add_argument("--deltas", default=None,
                   help="comma-separated perturbation sizes")
    p.add_argument("--big-n", type=int, default=None,
                   help="truncation order (default: data n_max)")
    _add_common(p)
    p.add_argument("--out", required=True, help="ladder CSV")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("verify", help="check a reconstruction")
    p.add_argument("--data", required=True, help="spectral-data JSON")
    p.add_argument("--rec", default=None,
                   help="reconstructed coefficient CSV (mode=spectral)")
    p.add_argument("--mode", choices=("spectral", "weyl"), default="spectral")
    p.add_argument("--big-n", type=int, default=None,
                   help="truncation order (default: data n_max)")
    p.add_argument("--rtol", type=float, default=1e-3,
                   help="relative tolerance for mode=spectral")
    _add_common(p)
    p.add_argument("--out", required=True, help="verification report JSON")
    p.set_defaults(func=cmd_verify)

    return parser


_BOOL_KEYS = {"force"}


def _load_config(path) -> list:
    """key=value lines -> flag tokens (later explicit flags win)."""
    tokens: list = []
    with open(path) as fh:
        for i, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError("%s line %d: expected key=value" % (path, i))
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("_", "-")
            if key in _BOOL_KEYS:
                if val.lower() in ("1", "true", "yes"):
                    tokens.append("--" + key)
                elif val.lower() not in ("0", "false", "no"):
                    raise ValueError("%s line %d: %s must be boolean"
                                     % (path, i, key))
            else:
                tokens.extend(["--" + key, val])
    return tokens


def _apply_config(argv: list) -> list:
    """Splice --config file values in as defaults before explicit flags."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise ValueError("--config needs a file argument")
    tokens = _load_config(argv[i + 1])
    rest = argv[:i] + argv[i + 2:]
    if not rest or rest[0].startswith("-"):
        raise ValueError("--config requires a subcommand")
    return [rest[0]] + tokens + rest[1:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _apply_config(argv)
    except (OSError, ValueError) as exc:
        print("spectral3: %s" % exc, file=sys.stderr)
        return 1
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SingularSystemError as exc:
        print("spectral3: %s" % exc, file=sys.stderr)
        return 3
    except AdmissibilityViolationError as exc:
        print("spectral3: %s" % exc, file=sys.stderr)
        return 4
    except Spectral3Error as exc:
        print("spectral3: %s" % exc, file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print("spectral3: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
