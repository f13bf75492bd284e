"""Command-line interface: ``qptomo {probe,reconstruct,predict,verify,design}``.

Exit codes: 0 success, 1 check failed, 2 parse error, 3 dimension mismatch,
4 ill-conditioned probe set, 5 quadratic inconsistency, 6 cutoff too small.
Structured output is JSON (or CSV for Q-grids) on stdout or ``--out``;
diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

import numpy as np

from . import channels, fock, qform, tomo
from .errors import CutoffTooSmall, DimensionMismatch, IllConditioned, QuadraticInconsistency, TomographyError


EXIT_FAIL = 1
EXIT_PARSE = 2
EXIT_DIMENSION = 3
EXIT_ILL_CONDITIONED = 4
EXIT_QUADRATIC = 5
EXIT_CUTOFF = 6

ANALYTIC_TOL = 1e-8
ORACLE_TOL = 1e-6


class ParseError(Exception):
    pass


def _diag(fmt: str, *args):
    sys.stderr.write("qptomo: " + (fmt % args if args else fmt) + "\n")


# -- parsing helpers -------------------------------------------------------------


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _finite(obj):
    # strict JSON has no Infinity/NaN; non-finite numbers become null
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _dump(obj, path: Optional[str]):
    text = json.dumps(_finite(obj), indent=2, allow_nan=False) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise ParseError(f"cannot parse complex number {text!r}") from exc


def parse_probes(text: Optional[str], k: int) -> np.ndarray:
    """``"default"``, a JSON file of probes, or inline probes.

    Inline probes are separated by ``;`` or whitespace; the modes of one probe
    by ``,``.  Example for one mode: ``"0;1;1j"``.
    """
    if text is None or text == "default":
        return tomo.default_probes(k)
    if text.endswith(".json"):
        data = _load_json(text)
        return np.array([np.atleast_1d(qform.decode_complex(p)) for p in data])
    items = [p for p in text.replace(";", " ").split() if p]
    probes = np.array([[_complex(x) for x in item.split(",")] for item in items])
    if probes.shape[1] != k:
        raise DimensionMismatch(f"probes have {probes.shape[1]} modes, channel has {k}")
    return probes


def load_channel(path: str):
    """Return ``(source, raw_dict)`` for a channel file or a reconstruction report."""
    data = _load_json(path)
    try:
        if "residual_K" in data:
            form = qform.form_from_dict(data["choi"])
            return channels.GaussianChannelSpec(form.n_modes // 2, form, "reconstruction"), data
        return channels.spec_from_dict(data), data
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DimensionMismatch):
            raise
        raise ParseError(f"{path}: bad channel description ({exc})") from exc


def load_records(path: str) -> List[channels.ProbeRecord]:
    data = _load_json(path)
    items = data["records"] if isinstance(data, dict) else data
    try:
        return [channels.ProbeRecord.from_dict(item) for item in items]
    except DimensionMismatch:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: bad probe record ({exc})") from exc


def parse_grid(text: str):
    try:
        cx, cy, half, res = text.split(",")
        cx, cy, half, res = float(cx), float(cy), float(half), int(res)
    except ValueError as exc:
        raise ParseError(f"--grid expects CX,CY,HALFWIDTH,RES, got {text!r}") from exc
    if res < 2 or half <= 0:
        raise ParseError("--grid needs RES >= 2 and HALFWIDTH > 0")
    xs = cx + np.linspace(-half, half, res)
    ys = cy + np.linspace(-half, half, res)
    return [complex(x, y) for y in ys for x in xs]


def parse_input(text: str):
    """``coherent:ALPHA``, ``fock:C0,C1,...`` or ``squeezed:R,Z``."""
    try:
        kind, _, body = text.partition(":")
        if kind == "coherent":
            return kind, _complex(body)
        if kind == "fock":
            return kind, np.array([_complex(x) for x in body.split(",")])
        if kind == "squeezed":
            r, z = body.split(",")
            return kind, (float(r), _complex(z))
    except (ValueError, ParseError) as exc:
        raise ParseError(f"bad --input {text!r}: {exc}") from exc
    raise ParseError(f"unknown input kind in {text!r}")


def oracle_channel(raw: dict, cutoff: int) -> fock.KrausChannel:
    params = channels.named_parameters(raw)
    if params is None:
        raise ParseError("--oracle needs a named single-mode channel (bs, thermal, phase, identity)")
    return fock.gaussian_kraus(params["t"], params.get("nbar", 0.0), 0.0, cutoff)


# -- commands ----------------------------------------------------------------------


def cmd_probe(args) -> int:
    spec, _ = load_channel(args.channel)
    alphas = parse_probes(args.probes, spec.k)
    tomo.ProbeSet(spec.k, alphas, trace_preserving=args.tp)
    records = channels.simulate_probes(spec, alphas)
    if args.sigma:
        records = tomo.add_noise(records, args.sigma, args.seed)
    header = {"channel": spec.label, "k": spec.k, "sigma": args.sigma, "seed": args.seed}
    _dump({"header": header, "records": [r.to_dict() for r in records]}, args.out)
    return 0


def cmd_reconstruct(args) -> int:
    records = load_records(args.records)
    if args.closed_form:
        rec = tomo.closed_form_default(records)
    else:
        rec = tomo.reconstruct(records, trace_preserving=args.tp)
    report = rec.to_dict()
    tol = args.tol or ANALYTIC_TOL
    ok = rec.residual_K <= tol and rec.residual_J <= tol and not rec.warnings
    report["within_tolerance"] = ok
    report["tolerance"] = tol
    _dump(report, args.out)
    if not ok:
        _diag("residuals (%.3g, %.3g) or conditioning outside tolerance %.1e", rec.residual_K, rec.residual_J, tol)
    return 0 if ok else EXIT_FAIL


def predict_grid(spec, raw, state, points, use_oracle: bool, cutoff: int) -> np.ndarray:
    kind, value = state
    if use_oracle:
        if kind == "coherent":
            psi = fock.coherent_vector(value, cutoff)
        elif kind == "squeezed":
            psi = fock.displaced_squeezed_vector(value[0], value[1], cutoff)
        else:
            psi = fock.fock_vector(value / np.linalg.norm(value), cutoff)
        out = fock.apply_channel(oracle_channel(raw, cutoff), fock.ket_to_dm(psi))
        return np.array([fock.q_eval(out, z) for z in points])
    if kind == "coherent":
        form = channels.predict_coherent(spec, [value])
        return qform.evaluate_q_grid(form, np.array(points))
    if kind == "squeezed":
        st = channels.BargmannState.displaced_squeezed(*value)
        return np.array([channels.predict_state_q(spec, st, z) for z in points])
    raise ParseError("Fock-coefficient inputs are only supported with --oracle")


def cmd_predict(args) -> int:
    spec, raw = load_channel(args.channel)
    if spec.k != 1:
        raise DimensionMismatch("Q-grid export is single-mode only")
    points = parse_grid(args.grid)
    values = predict_grid(spec, raw, parse_input(args.input), points, args.oracle, args.cutoff)
    lines = ["re_z,im_z,q_value"] + [f"{z.real:.12g},{z.imag:.12g},{v:.17g}" for z, v in zip(points, values)]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _max_block_error(a: qform.GaussianQForm, b: qform.GaussianQForm) -> float:
    ba, bb = a.blocks(), b.blocks()
    return float(max(np.max(np.abs(np.asarray(ba[k]) - np.asarray(bb[k]))) for k in ba))


def run_verify(spec, raw, records, tol: float, oracle_tol: float, cutoff: int, q: float, tp: bool = False) -> dict:
    """Simulate, reconstruct, predict and compare; returns the check report."""
    checks = []

    def check(name, deviation, limit):
        checks.append({"name": name, "deviation": float(deviation), "tolerance": limit, "pass": bool(deviation <= limit)})

    try:
        rec = tomo.reconstruct(records, trace_preserving=tp)
    except (IllConditioned, QuadraticInconsistency, tomo.ConjugateMismatch) as exc:
        checks.append({"name": type(exc).__name__, "deviation": None, "tolerance": None, "pass": False, "error": str(exc)})
        return {"channel": spec.label, "checks": checks, "pass": False, "first_failure": type(exc).__name__}
    check("residual_K", rec.residual_K, tol)
    check("residual_J", rec.residual_J, tol)
    check("choi_blocks", _max_block_error(rec.choi, spec.choi), tol)
    if spec.k == 1 and len(records) == 6 and np.allclose([r.alpha[0] for r in records], tomo.DEFAULT_PROBES):
        check("closed_form", _max_block_error(tomo.closed_form_default(records).choi, rec.choi), tol)
    held_out = [0.3 + 0.4j, -0.8 + 0.1j, 1.1 - 0.6j]
    if spec.k == 1:
        grid = [complex(x, y) for x in np.linspace(-2, 2, 5) / np.sqrt(2) for y in np.linspace(-2, 2, 5) / np.sqrt(2)]
        dev = 0.0
        for a in held_out:
            f_true = channels.predict_coherent(spec, [a])
            f_rec = channels.predict_coherent(rec, [a])
            dev = max(dev, float(np.max(np.abs(qform.evaluate_q_grid(f_true, grid) - qform.evaluate_q_grid(f_rec, grid)))))
        check("prediction", dev, tol)
        params = channels.named_parameters(raw) if raw is not None else None
        if params is not None:
            kr = fock.gaussian_kraus(params["t"], params.get("nbar", 0.0), 0.0, cutoff)
            dev = 0.0
            for a in held_out:
                out = fock.apply_channel(kr, fock.ket_to_dm(fock.coherent_vector(a, cutoff)))
                f_rec = channels.predict_coherent(rec, [a])
                dev = max(dev, max(abs(qform.evaluate_q(f_rec, [z]) - fock.q_eval(out, z)) for z in grid))
            check("oracle_prediction", dev, oracle_tol)
            psi = fock.coherent_vector(0.5, cutoff)
            omega = fock.one_sided_apply_ket(kr, fock.tmss_vector(q, cutoff))
            via_tmss = fock.predict_from_choi(fock.tmss_reconstruct(omega, q, tol=oracle_tol), psi)
            direct = fock.apply_channel(kr, fock.ket_to_dm(psi))
            check("tmss_fidelity", abs(1.0 - fock.fidelity(via_tmss, direct)), oracle_tol)
    failures = [c["name"] for c in checks if not c["pass"]]
    return {"channel": spec.label, "checks": checks, "pass": not failures, "first_failure": failures[0] if failures else None}


def cmd_verify(args) -> int:
    spec, raw = load_channel(args.channel)
    if args.records:
        records = load_records(args.records)
    else:
        records = channels.simulate_probes(spec, parse_probes(args.probes, spec.k))
    report = run_verify(spec, raw, records, args.tol or ANALYTIC_TOL, args.oracle_tol, args.cutoff, args.q, args.tp)
    _dump(report, args.out)
    if not report["pass"]:
        _diag("verification failed: %s", report["first_failure"])
        return EXIT_FAIL
    return 0


def load_candidates(path: str) -> List[tomo.ProbeSet]:
    data = _load_json(path)
    items = data["candidates"] if isinstance(data, dict) else data
    try:
        out = []
        for i, item in enumerate(items):
            alphas = np.array([np.atleast_1d(qform.decode_complex(p)) for p in item["alphas"]])
            k = int(item.get("k", alphas.shape[1]))
            out.append(tomo.ProbeSet(k, alphas, bool(item.get("trace_preserving", False)), item.get("label", f"set{i}")))
        return out
    except DimensionMismatch:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: bad candidate probe set ({exc})") from exc


def cmd_design(args) -> int:
    candidates = load_candidates(args.candidates)
    if not candidates:
        raise ParseError("candidates file holds no probe sets")
    _dump({"report": tomo.probe_design(candidates)}, args.out)
    return 0


# -- entry point ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qptomo", description="Gaussian process tomography from coherent probes")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--tol", type=float, help=f"analytic tolerance (default {ANALYTIC_TOL:g})")
        return p

    p = common(sub.add_parser("probe", help="simulate coherent-probe records"))
    p.add_argument("--channel", required=True)
    p.add_argument("--probes", default="default")
    p.add_argument("--tp", action="store_true", help="only require 2k+1 probes")
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_probe)

    p = common(sub.add_parser("reconstruct", help="reconstruct the Choi Q-form"))
    p.add_argument("--records", required=True)
    p.add_argument("--tp", action="store_true", help="trace-preserving path")
    p.add_argument("--closed-form", action="store_true", help="explicit default-probe formulas")
    p.set_defaults(func=cmd_reconstruct)

    p = common(sub.add_parser("predict", help="export the output Q-function on a grid (CSV)"))
    p.add_argument("--channel", required=True, help="channel file or reconstruction report")
    p.add_argument("--input", default="coherent:0", help="coherent:A | fock:C0,C1,... | squeezed:R,Z")
    p.add_argument("--grid", default="0,0,2,5")
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--cutoff", type=int, default=40)
    p.set_defaults(func=cmd_predict)

    p = common(sub.add_parser("verify", help="end-to-end check against ground truth and the Fock oracle"))
    p.add_argument("--channel", required=True)
    p.add_argument("--records", help="use these records instead of simulating")
    p.add_argument("--tp", action="store_true", help="trace-preserving reconstruction")
    p.add_argument("--probes", default="default")
    p.add_argument("--cutoff", type=int, default=40)
    p.add_argument("--q", type=float, default=0.4)
    p.add_argument("--oracle-tol", type=float, default=ORACLE_TOL)
    p.set_defaults(func=cmd_verify)

    p = common(sub.add_parser("design", help="rank candidate probe sets"))
    p.add_argument("--candidates", required=True)
    p.set_defaults(func=cmd_design)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else 0
    try:
        return args.func(args)
    except ParseError as exc:
        _diag("%s", exc)
        return EXIT_PARSE
    except DimensionMismatch as exc:
        _diag("dimension mismatch: %s", exc)
        return EXIT_DIMENSION
    except IllConditioned as exc:
        _diag("ill-conditioned: %s", exc)
        return EXIT_ILL_CONDITIONED
    except QuadraticInconsistency as exc:
        _diag("quadratic inconsistency: %s", exc)
        return EXIT_QUADRATIC
    except CutoffTooSmall as exc:
        _diag("cutoff too small: %s", exc)
        return EXIT_CUTOFF
    except (TomographyError, ValueError) as exc:
        _diag("%s: %s", type(exc).__name__, exc)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
