"""Command-line front end.

Exit codes are a stable contract so shell pipelines can sweep state
families:

* 0 — separable within the tolerance (or: check passed)
* 1 — entanglement signal (or: check failed its statistical gate)
* 2 — inconclusive (step budget exhausted)
* 64 — usage error (bad flags or flag values)
* 65 — data error (malformed state file, refused run)
* 66 — missing input file

Environment overrides: ``SEPITER_SAMPLES`` sets the default sample count
when ``--samples`` is omitted; ``SEPITER_THREADS`` sets worker threads for
the chunked Monte Carlo reductions (results are bit-identical for any
value).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import criteria, ensemble, solver
from .operators import DensityMatrix, HermitianOperator, hermitize, partial_trace, tensor, trace_norm, trace_norm_of
from .params import paper_params
from .sampling import SeedStream, derive_seed, make_sample_set
from .solver import PaperModeRefusal, SolverConfig, TraceRow

EX_OK = 0
EX_ENTANGLED = 1
EX_INCONCLUSIVE = 2
EX_USAGE = 64
EX_DATAERR = 65
EX_NOINPUT = 66

_OUTCOME_CODES = {
    solver.SEPARABLE: EX_OK,
    solver.ENTANGLED: EX_ENTANGLED,
    solver.INCONCLUSIVE: EX_INCONCLUSIVE,
}


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _default_samples() -> int:
    raw = os.environ.get("SEPITER_SAMPLES", "100000")
    try:
        value = int(raw)
    except ValueError:
        raise _CliError(EX_USAGE, f"SEPITER_SAMPLES must be an integer, got {raw!r}")
    if value < 1:
        raise _CliError(EX_USAGE, "SEPITER_SAMPLES must be >= 1")
    return value


def sci_from_ln(ln_value: float) -> str:
    """Scientific-notation rendering of exp(ln_value) that works far beyond
    the float range, e.g. sci_from_ln(1789.46) = '2.43e+777'."""
    if math.isinf(ln_value):
        return "0" if ln_value < 0 else "inf"
    decimal = ln_value / math.log(10.0)
    exponent = math.floor(decimal)
    mantissa = 10.0 ** (decimal - exponent)
    return f"{mantissa:.3f}e{exponent:+d}"


def load_state(path: str) -> DensityMatrix:
    """Parse a state file; Hermiticity, trace and positivity are enforced
    on load with the operator-core tolerances."""
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise _CliError(EX_NOINPUT, f"no such state file: {path}")
    except (OSError, json.JSONDecodeError) as err:
        raise _CliError(EX_DATAERR, f"cannot parse {path}: {err}")
    try:
        dims = tuple(int(d) for d in payload["dims"])
        entries = payload["matrix"]
        d = dims[0] * dims[1]
        if len(entries) != d * d:
            raise ValueError(f"expected {d * d} matrix entries, got {len(entries)}")
        flat = np.array(
            [complex(float(re), float(im)) for re, im in entries], dtype=np.complex128
        )
        return DensityMatrix.from_matrix(flat.reshape(d, d), (dims[0], dims[1]))
    except (KeyError, TypeError, ValueError, IndexError) as err:
        raise _CliError(EX_DATAERR, f"invalid state file {path}: {err}")


def save_state(path: str, rho: DensityMatrix) -> None:
    flat = rho.mat.reshape(-1)
    payload = {
        "dims": [rho.dims[0], rho.dims[1]],
        "matrix": [[float(z.real), float(z.imag)] for z in flat],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


@dataclass(frozen=True)
class RunReport:
    """Verdict, configuration echo and parameter echo for one solver run.

    All fields are JSON-native so a report round-trips losslessly through
    `to_json` / `from_json`.
    """

    outcome: str
    final_residual: float
    final_x_norm: float
    steps_used: int
    noise_floor: float
    warnings: list
    config: dict
    params: dict
    timing_seconds: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls(**json.loads(text))


class _CsvSink:
    """Streams trace rows to a CSV file, flushed per row so long runs are
    inspectable while still in flight."""

    HEADER = "step,residual_l1,x_norm_l1,lambda,noise_floor\n"

    def __init__(self, path: str):
        self._fh = open(path, "w")
        self._fh.write(self.HEADER)
        self._fh.flush()

    def __call__(self, row: TraceRow) -> None:
        self._fh.write(
            f"{row.step},{row.residual!r},{row.x_norm!r},"
            f"{row.lambda_used!r},{row.noise_floor!r}\n"
        )
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="sepiter", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="report the analytic constants for (n, kappa)")
    p.add_argument("--n", type=int, required=True, help="single-factor dimension (>= 2)")
    p.add_argument("--kappa", type=float, required=True, help="tolerance in (0, 1)")

    p = sub.add_parser("test", help="run the separability iteration on a state file")
    p.add_argument("input", help="state file (JSON)")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--mode", choices=["practical", "paper"], default="practical")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="step size (default: mode-specific)")
    p.add_argument("--samples", type=int, default=None,
                   help="Monte Carlo sample count (default: SEPITER_SAMPLES or 100000)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--bound", type=float, default=None,
                   help="trace-norm escape bound (default: mode-specific)")
    p.add_argument("--fresh", action="store_true",
                   help="resample every step instead of the fixed-sample default")
    p.add_argument("--no-adaptive", action="store_true", help="disable step-size halving")
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--regularize", type=float, default=None, metavar="KAPPA",
                   help="mix the input toward white noise before testing")
    p.add_argument("--trace", default=None, metavar="CSV", help="stream the iteration trace here")

    p = sub.add_parser("ppt", help="partial-transpose check of a state file")
    p.add_argument("input")

    p = sub.add_parser("gen", help="generate a state file from a named family")
    p.add_argument("family", choices=criteria.family_names())
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--w", type=float, default=0.5, help="werner weight")
    p.add_argument("--alpha", type=float, default=0.5, help="isotropic weight")
    p.add_argument("--d", type=int, default=2, help="isotropic factor dimension")
    p.add_argument("--dims", type=int, nargs=2, default=[2, 2], metavar=("NA", "NB"))
    p.add_argument("--terms", type=int, default=4, help="projectors in random_separable")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("check-moments", help="Monte Carlo vs closed-form moment integrals")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("reconstruct", help="smeared-ensemble reconstruction check")
    p.add_argument("input")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)

    return parser


def _cmd_params(args) -> int:
    if args.n < 2:
        raise _CliError(EX_USAGE, "--n must be >= 2")
    if not 0.0 < args.kappa < 1.0:
        raise _CliError(EX_USAGE, "--kappa must lie in (0, 1)")
    pp = paper_params(args.n, args.kappa)
    out = asdict(pp)
    out["smear_coeff_sci"] = sci_from_ln(pp.ln_smear_coeff)
    out["range_coeff_sci"] = sci_from_ln(pp.ln_range_coeff)
    out["lambda_sci"] = sci_from_ln(pp.ln_lambda)
    print(json.dumps(out, indent=2))
    return EX_OK


def _cmd_test(args) -> int:
    rho = load_state(args.input)
    if args.regularize is not None:
        if not 0.0 < args.regularize < 1.0:
            raise _CliError(EX_USAGE, "--regularize must lie in (0, 1)")
        rho = solver.regularize(rho, args.regularize)
    samples = args.samples if args.samples is not None else _default_samples()
    try:
        cfg = SolverConfig(
            kappa=args.kappa,
            mode=args.mode,
            lam=args.lam,
            sample_count=samples,
            sample_strategy="fresh" if args.fresh else "fixed",
            max_iters=args.max_iters,
            bound=args.bound,
            seed=args.seed,
            adaptive=not args.no_adaptive,
            patience=args.patience,
        )
    except ValueError as err:
        raise _CliError(EX_USAGE, str(err))

    sink = _CsvSink(args.trace) if args.trace else None
    started = time.perf_counter()
    try:
        result = solver.run(rho, cfg, sink=sink)
    except PaperModeRefusal as err:
        raise _CliError(EX_DATAERR, str(err))
    except ValueError as err:
        raise _CliError(EX_DATAERR, str(err))
    finally:
        if sink is not None:
            sink.close()
    elapsed = time.perf_counter() - started

    n = rho.dims[0]
    config_echo = asdict(cfg)
    config_echo["lambda_effective"] = (
        cfg.lam
        if cfg.lam is not None
        else (
            math.exp(result.params.ln_lambda)
            if cfg.mode == "paper"
            else solver.default_practical_lambda(n)
        )
    )
    config_echo["bound_effective"] = (
        cfg.bound
        if cfg.bound is not None
        else (result.params.domain_bound if cfg.mode == "paper" else solver.default_practical_bound(n))
    )
    config_echo["regularized"] = args.regularize
    params_echo = asdict(result.params)
    params_echo["smear_order_true_p0"] = ensemble.choose_smear_order(
        float(np.linalg.eigvalsh(rho.mat)[0]), rho.dim
    ) if float(np.linalg.eigvalsh(rho.mat)[0]) > 0 else None

    v = result.verdict
    report = RunReport(
        outcome=v.outcome,
        final_residual=v.final_residual,
        final_x_norm=v.final_x_norm,
        steps_used=v.steps_used,
        noise_floor=v.noise_floor,
        warnings=list(v.warnings),
        config=config_echo,
        params=params_echo,
        timing_seconds=elapsed,
    )
    print(report.to_json())
    return _OUTCOME_CODES[v.outcome]


def _cmd_ppt(args) -> int:
    rho = load_state(args.input)
    if rho.dims[1] < 2:
        raise _CliError(EX_DATAERR, "ppt needs a bipartite state (n_B >= 2)")
    lo = criteria.ppt_min_eigenvalue(rho)
    passed = lo >= -criteria.PPT_ATOL
    print(json.dumps({"ppt_min_eigenvalue": lo, "ppt": passed}, indent=2))
    return EX_OK if passed else EX_ENTANGLED


def _cmd_gen(args) -> int:
    parameters = {
        "w": args.w,
        "alpha": args.alpha,
        "d": args.d,
        "dims": tuple(args.dims),
        "terms": args.terms,
        "seed": args.seed,
    }
    try:
        rho = criteria.StateSpec(args.family, parameters).build()
    except ValueError as err:
        raise _CliError(EX_USAGE, str(err))
    save_state(args.output, rho)
    print(json.dumps({"written": args.output, "family": args.family,
                      "dims": list(rho.dims)}, indent=2))
    return EX_OK


def _random_unit_trace_norm_hermitian(d: int, seed: int, stream_id: int) -> HermitianOperator:
    gen = SeedStream(seed, stream_id).generator()
    g = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
    h = (g + g.conj().T) / 2.0
    op = HermitianOperator(h)
    return HermitianOperator(h / trace_norm(op))


def _cmd_check_moments(args) -> int:
    if args.n < 2:
        raise _CliError(EX_USAGE, "--n must be >= 2")
    samples = args.samples if args.samples is not None else _default_samples()
    cases = []
    single_set = make_sample_set(args.seed, samples, (args.n, 1))
    for i in range(3):
        a = _random_unit_trace_norm_hermitian(args.n, args.seed, 100 + i)
        mc, nf = ensemble.mc_moment_single(a, single_set)
        closed = ensemble.moment_single_closed(a)
        gap = trace_norm_of(mc.mat - closed.mat)
        cases.append({"kind": "single", "index": i, "gap": gap, "noise_floor": nf,
                      "within_3_sigma": gap <= 3.0 * nf})
    pair_set = make_sample_set(derive_seed(args.seed, 1), samples, (args.n, args.n))
    for i in range(2):
        y = _random_unit_trace_norm_hermitian(args.n * args.n, args.seed, 200 + i)
        mc, nf = ensemble.mc_moment_bipartite(y, pair_set)
        closed = ensemble.moment_bipartite_closed(y, (args.n, args.n))
        gap = trace_norm_of(mc.mat - closed.mat)
        cases.append({"kind": "bipartite", "index": i, "gap": gap, "noise_floor": nf,
                      "within_3_sigma": gap <= 3.0 * nf})
    ok = all(c["within_3_sigma"] for c in cases)
    print(json.dumps({"n": args.n, "samples": samples, "cases": cases, "pass": ok}, indent=2))
    return EX_OK if ok else EX_ENTANGLED


def _single_party(mat: np.ndarray, n: int) -> DensityMatrix:
    return DensityMatrix.from_matrix(hermitize(mat, atol=1e-11), (n, 1))


def _cmd_reconstruct(args) -> int:
    rho = load_state(args.input)
    samples = args.samples if args.samples is not None else _default_samples()

    def factor_check(factor: DensityMatrix, seed: int) -> dict:
        p0 = float(np.linalg.eigvalsh(factor.mat)[0])
        if p0 <= 0.0:
            raise _CliError(
                EX_DATAERR,
                "state factor is rank deficient; regularize first "
                "(e.g. `sepiter test --regularize`)",
            )
        order = ensemble.choose_smear_order(p0, factor.dim)
        s = make_sample_set(seed, samples, (factor.dim, 1))
        est, nf = ensemble.reconstruct(factor, order, s)
        return {
            "smear_order": order,
            "p0": p0,
            "error_l1": trace_norm_of(est.mat - factor.mat),
            "noise_floor": nf,
            "estimate": est,
        }

    if rho.dims[1] == 1:
        res = factor_check(rho, args.seed)
        ok = res["error_l1"] <= 3.0 * res["noise_floor"]
        print(json.dumps({
            "mode": "single_party",
            "smear_order": res["smear_order"],
            "error_l1": res["error_l1"],
            "noise_floor": res["noise_floor"],
            "pass": ok,
        }, indent=2))
        return EX_OK if ok else EX_ENTANGLED

    n_a, n_b = rho.dims
    left = _single_party(partial_trace(rho.op, rho.dims, "second").mat, n_a)
    right = _single_party(partial_trace(rho.op, rho.dims, "first").mat, n_b)
    res_a = factor_check(left, args.seed)
    res_b = factor_check(right, derive_seed(args.seed, 1))
    product_target = tensor(left.op, right.op)
    product_est = tensor(res_a["estimate"], res_b["estimate"])
    err = trace_norm_of(product_est.mat - product_target.mat)
    nf = res_a["noise_floor"] + res_b["noise_floor"]
    ok = err <= 3.0 * nf
    print(json.dumps({
        "mode": "factor_wise",
        "factors": [
            {k: v for k, v in res_a.items() if k != "estimate"},
            {k: v for k, v in res_b.items() if k != "estimate"},
        ],
        "product_error_l1": err,
        "noise_floor": nf,
        "input_vs_marginal_product_l1": trace_norm_of(rho.mat - product_target.mat),
        "pass": ok,
    }, indent=2))
    return EX_OK if ok else EX_ENTANGLED


_COMMANDS = {
    "params": _cmd_params,
    "test": _cmd_test,
    "ppt": _cmd_ppt,
    "gen": _cmd_gen,
    "check-moments": _cmd_check_moments,
    "reconstruct": _cmd_reconstruct,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except _CliError as err:
        print(f"sepiter: error: {err}", file=sys.stderr)
        return err.code


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
