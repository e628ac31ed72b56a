"""Command-line interface: entropies, gaps, scans, and paper-example reproduction.

State sources are either catalog names (``--state "werner(3,0.7)"``) or JSON
operator files (``--file state.json``).  Operator JSON is row-major:
``{"dims": [2, 2], "re": [...], "im": [...]}``; POVM JSON is
``{"effects": [{"re": [...], "im": [...]}, ...], "dims": [...]}``.
Every file-writing command drops a RunManifest JSON next to its outputs.
Exit codes: 0 success, 2 validation failure, 3 non-convergence.
"""

from __future__ import annotations

import json
import math
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import click
import numpy as np

from . import __version__
from .classes import ConditionalMeasurement
from .core import DensityMatrix, PartitionSpec, Povm, ValidationError, validate_povm, validate_state
from .entropy import certify_optimal, observational_entropy, recovery_bounds, von_neumann
from .optimize import (
    OptConfig,
    OptResult,
    minimize_lo,
    minimize_locc_oneway,
    minimize_lostar,
    ppt_gap_w3,
    sep_gap_heuristic,
    werner_analytic,
)
from .partitions import robustness_scan, robustness_to_csv, scan_partitions
from .states import CATALOG, from_catalog

LN2 = math.log(2.0)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NO_CONVERGENCE = 3


# ---------------------------------------------------------------------------
# JSON operator formats


def operator_to_json(mat: np.ndarray, dims) -> dict:
    a = np.asarray(mat, dtype=complex)
    return {
        "dims": [int(d) for d in dims],
        "re": a.real.ravel().tolist(),
        "im": a.imag.ravel().tolist(),
    }


def operator_from_json(payload: dict) -> tuple[np.ndarray, tuple[int, ...]]:
    dims = tuple(int(d) for d in payload["dims"])
    d = int(np.prod(dims))
    re = np.asarray(payload["re"], dtype=float)
    im = np.asarray(payload.get("im", np.zeros_like(re)), dtype=float)
    if re.size != d * d or im.size != d * d:
        raise ValidationError(
            f"operator payload has {re.size} entries, expected {d * d} for dims {dims}"
        )
    return (re + 1j * im).reshape(d, d), dims


def state_from_json(payload: dict) -> DensityMatrix:
    mat, dims = operator_from_json(payload)
    problems = validate_state(mat, dims)
    if problems:
        raise ValidationError("; ".join(problems))
    return DensityMatrix(mat, dims)


def povm_from_json(payload: dict) -> Povm:
    dims = tuple(int(d) for d in payload["dims"])
    d = int(np.prod(dims))
    effects = []
    for entry in payload["effects"]:
        re = np.asarray(entry["re"], dtype=float)
        im = np.asarray(entry.get("im", np.zeros_like(re)), dtype=float)
        effects.append((re + 1j * im).reshape(d, d))
    problems = validate_povm(effects)
    if problems:
        raise ValidationError("; ".join(problems))
    labels = tuple(payload.get("labels", ()))
    tag = payload.get("class_tag", "Unverified")
    return Povm(np.array(effects), labels, tag)


def povm_to_json(povm: Povm, dims) -> dict:
    return {
        "dims": [int(d) for d in dims],
        "labels": list(povm.labels),
        "class_tag": povm.class_tag,
        "effects": [
            {"re": e.real.ravel().tolist(), "im": e.imag.ravel().tolist()}
            for e in povm.effects
        ],
    }


def witness_to_json(witness, dims) -> dict:
    if witness is None:
        return {"kind": "none"}
    if isinstance(witness, Povm):
        out = povm_to_json(witness, dims)
        out["kind"] = "povm"
        return out
    if isinstance(witness, ConditionalMeasurement):
        return {"kind": "protocol", "root": _protocol_to_json(witness)}
    raise ValidationError(f"cannot serialize witness of type {type(witness)!r}")


def _protocol_to_json(node: ConditionalMeasurement) -> dict:
    block_dim = node.povm.d
    payload = {
        "block": list(node.block),
        "povm": povm_to_json(node.povm, (block_dim,)),
    }
    if node.then is not None:
        payload["then"] = [_protocol_to_json(child) for child in node.then]
    return payload


# ---------------------------------------------------------------------------
# state / config parsing


def _parse_state_spec(spec: str) -> DensityMatrix:
    spec = spec.strip()
    if "(" in spec:
        name, rest = spec.split("(", 1)
        if not rest.endswith(")"):
            raise ValidationError(f"malformed state spec {spec!r}")
        args = []
        kwargs = {}
        body = rest[:-1].strip()
        if body:
            for token in body.split(","):
                token = token.strip()
                if "=" in token:
                    key, val = token.split("=", 1)
                    kwargs[key.strip()] = _parse_number(val)
                else:
                    args.append(_parse_number(token))
        if "lambda" in kwargs:  # python keyword; catalog uses lam
            kwargs["lam"] = kwargs.pop("lambda")
        return from_catalog(name, *args, **kwargs)
    return from_catalog(spec)


def _parse_number(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        return float(text)


def _load_state(state: str | None, file: str | None) -> DensityMatrix:
    if (state is None) == (file is None):
        raise ValidationError("provide exactly one of --state or --file")
    if state is not None:
        return _parse_state_spec(state)
    payload = json.loads(Path(file).read_text())
    return state_from_json(payload)


def _units(value: float, nats: bool) -> float:
    return value * LN2 if nats else value


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    version: str
    wall_time_s: float
    outputs: list[str]


def _write_manifest(path: Path, manifest: RunManifest):
    path.write_text(json.dumps(asdict(manifest), indent=2) + "\n")


def _config_from_flags(seed, restarts, max_iters, workers) -> OptConfig:
    return OptConfig(seed=seed, restarts=restarts, max_iters=max_iters, workers=workers)


def _echo_fail(err: Exception):
    click.echo(f"error: {err}", err=True)


# ---------------------------------------------------------------------------
# commands


@click.group()
def main():
    """Observational-entropy gaps under locality-restricted measurements."""


_state_opts = [
    click.option("--state", default=None, help='catalog state, e.g. "werner(3,0.7)" or "w(4)"'),
    click.option("--file", default=None, type=click.Path(exists=True), help="state JSON file"),
]


def _apply(opts):
    def wrap(fn):
        for opt in reversed(opts):
            fn = opt(fn)
        return fn

    return wrap


@main.command()
@_apply(_state_opts)
@click.option("--povm", "povm_file", required=True, type=click.Path(exists=True), help="POVM JSON file")
@click.option("--nats", is_flag=True, help="report entropies in nats instead of bits")
def entropy(state, file, povm_file, nats):
    """Observational entropy of a state under a POVM, with recovery sandwich."""
    try:
        rho = _load_state(state, file)
        povm = povm_from_json(json.loads(Path(povm_file).read_text()))
        if povm.d != rho.d:
            raise ValidationError(
                f"POVM dimension {povm.d} does not match state dimension {rho.d}"
            )
    except (ValidationError, KeyError, json.JSONDecodeError) as err:
        _echo_fail(err)
        sys.exit(EXIT_VALIDATION)
    s_m = observational_entropy(rho, povm)
    s = von_neumann(rho)
    sandwich = recovery_bounds(rho, povm)
    cert = certify_optimal(rho, povm)
    unit = "nats" if nats else "bits"
    click.echo(f"S_M(rho)  = {_units(s_m, nats):.9f} {unit}")
    click.echo(f"S(rho)    = {_units(s, nats):.9f} {unit}")
    click.echo(f"gap       = {_units(s_m - s, nats):.9f} {unit}")
    click.echo(
        f"recovery  : {_units(sandwich.lower, nats):.9f} <= S_M <= {_units(sandwich.upper, nats):.9f}"
    )
    click.echo(f"optimal   : {'yes' if cert.optimal else 'no'} ({cert.reason})")
    sys.exit(EXIT_OK)


GAP_CLASSES = ("lostar", "lo", "locc1", "sep", "ppt-w3", "werner-exact")


@main.command()
@_apply(_state_opts)
@click.option("--class", "klass", required=True, type=click.Choice(GAP_CLASSES))
@click.option("--partition", default="", help='partition string like "AB|CD"; default fully partitioned')
@click.option("--seed", default=2025, show_default=True)
@click.option("--restarts", default=16, show_default=True)
@click.option("--max-iters", default=1200, show_default=True)
@click.option("--workers", default=1, show_default=True)
@click.option("--nats", is_flag=True)
@click.option("--witness-out", default=None, type=click.Path(), help="write the witness JSON here")
def gap(state, file, klass, partition, seed, restarts, max_iters, workers, nats, witness_out):
    """Minimize the entropy gap of a state over a measurement class."""
    t0 = time.time()
    try:
        if klass == "ppt-w3":
            res_w3 = ppt_gap_w3()
            result = OptResult(
                res_w3.gap_bits, res_w3.gap_bits, res_w3.witness, (res_w3.gap_bits,), True
            )
            rho = from_catalog("w", 3)
        elif klass == "werner-exact":
            if state is None or not state.startswith("werner"):
                raise ValidationError('class "werner-exact" requires --state "werner(d,lambda)"')
            rho = _parse_state_spec(state)
            d = rho.dims[0]
            exact = werner_analytic(d, _werner_lambda(state))
            result = OptResult(
                exact.s_measured_bits, exact.gap_bits, exact.witness, (exact.s_measured_bits,), True
            )
        else:
            rho = _load_state(state, file)
            part = PartitionSpec.from_string(partition, len(rho.dims))
            cfg = _config_from_flags(seed, restarts, max_iters, workers)
            if klass == "lostar":
                result = minimize_lostar(rho, part, cfg)
            elif klass == "lo":
                result = minimize_lo(rho, part, cfg)
            elif klass == "locc1":
                result = minimize_locc_oneway(rho, part, cfg=cfg)
            else:
                result = sep_gap_heuristic(rho, part, cfg=cfg)
    except (ValidationError, KeyError, json.JSONDecodeError) as err:
        _echo_fail(err)
        sys.exit(EXIT_VALIDATION)
    unit = "nats" if nats else "bits"
    payload = {
        "class": klass,
        "entropy": _units(result.entropy_bits, nats),
        "gap": _units(result.gap_bits, nats),
        "units": unit,
        "converged": result.converged,
        "restart_trace": [_units(v, nats) for v in result.trace],
        "wall_time_s": time.time() - t0,
    }
    if result.bounds is not None:
        payload["bounds"] = [_units(b, nats) for b in result.bounds]
    click.echo(json.dumps(payload, indent=2))
    if witness_out:
        out_path = Path(witness_out)
        out_path.write_text(
            json.dumps(witness_to_json(result.witness, rho.dims), indent=2) + "\n"
        )
        manifest = RunManifest(
            command=" ".join(sys.argv),
            config={"seed": seed, "restarts": restarts, "max_iters": max_iters,
                    "workers": workers, "class": klass, "partition": partition},
            seed=seed,
            version=__version__,
            wall_time_s=time.time() - t0,
            outputs=[str(out_path)],
        )
        _write_manifest(out_path.with_suffix(".manifest.json"), manifest)
    sys.exit(EXIT_OK if result.converged else EXIT_NO_CONVERGENCE)


def _werner_lambda(spec: str) -> float:
    body = spec.split("(", 1)[1].rstrip(")")
    vals = {}
    pos = []
    for p in (tok.strip() for tok in body.split(",")):
        if "=" in p:
            k, v = p.split("=", 1)
            vals[k.strip()] = float(v)
        else:
            pos.append(float(p))
    if "lambda" in vals:
        return vals["lambda"]
    if "lam" in vals:
        return vals["lam"]
    return pos[1]


@main.command()
@_apply(_state_opts)
@click.option("--class", "klass", default="lostar", type=click.Choice(["lostar", "lo", "locc1", "sep"]), show_default=True)
@click.option("--seed", default=2025, show_default=True)
@click.option("--restarts", default=8, show_default=True)
@click.option("--max-iters", default=800, show_default=True)
@click.option("--workers", default=1, show_default=True)
@click.option("--out", default="scan.csv", type=click.Path(), show_default=True)
def scan(state, file, klass, seed, restarts, max_iters, workers, out):
    """Per-partition gap scan of a state (CSV + JSON + manifest)."""
    t0 = time.time()
    try:
        rho = _load_state(state, file)
        cfg = _config_from_flags(seed, restarts, max_iters, workers)
        result = scan_partitions(rho, klass, cfg, state_name=state or file)
    except (ValidationError, json.JSONDecodeError) as err:
        _echo_fail(err)
        sys.exit(EXIT_VALIDATION)
    out_path = Path(out)
    out_path.write_text(result.to_csv())
    json_path = out_path.with_suffix(".json")
    json_path.write_text(result.to_json() + "\n")
    manifest = RunManifest(
        command=" ".join(sys.argv),
        config={"seed": seed, "restarts": restarts, "max_iters": max_iters, "workers": workers, "class": klass},
        seed=seed,
        version=__version__,
        wall_time_s=time.time() - t0,
        outputs=[str(out_path), str(json_path)],
    )
    _write_manifest(out_path.with_suffix(".manifest.json"), manifest)
    click.echo(result.to_csv(), nl=False)
    sys.exit(EXIT_OK)


@main.command()
@_apply(_state_opts)
@click.option("--class", "klass", default="lostar", type=click.Choice(["lostar", "lo", "locc1", "sep"]), show_default=True)
@click.option("--seed", default=2025, show_default=True)
@click.option("--restarts", default=8, show_default=True)
@click.option("--max-iters", default=800, show_default=True)
@click.option("--workers", default=1, show_default=True)
@click.option("--out", default="robustness.csv", type=click.Path(), show_default=True)
def robustness(state, file, klass, seed, restarts, max_iters, workers, out):
    """Fully partitioned gap of every reduced state after subsystem loss."""
    t0 = time.time()
    try:
        rho = _load_state(state, file)
        cfg = _config_from_flags(seed, restarts, max_iters, workers)
        result = robustness_scan(rho, klass, cfg)
    except (ValidationError, json.JSONDecodeError) as err:
        _echo_fail(err)
        sys.exit(EXIT_VALIDATION)
    csv_text = robustness_to_csv(state or file, klass, result)
    out_path = Path(out)
    out_path.write_text(csv_text)
    manifest = RunManifest(
        command=" ".join(sys.argv),
        config={"seed": seed, "restarts": restarts, "max_iters": max_iters, "workers": workers, "class": klass},
        seed=seed,
        version=__version__,
        wall_time_s=time.time() - t0,
        outputs=[str(out_path)],
    )
    _write_manifest(out_path.with_suffix(".manifest.json"), manifest)
    click.echo(csv_text, nl=False)
    sys.exit(EXIT_OK)


REPRODUCE_IDS = ("werner-curves", "multipartite-scan", "trine", "w-family")


@main.command()
@click.argument("figure", type=click.Choice(REPRODUCE_IDS))
@click.option("--out-dir", default=".", type=click.Path(file_okay=False), show_default=True)
@click.option("--seed", default=2025, show_default=True)
@click.option("--restarts", default=8, show_default=True)
@click.option("--max-iters", default=800, show_default=True)
@click.option("--workers", default=1, show_default=True)
def reproduce(figure, out_dir, seed, restarts, max_iters, workers):
    """Regenerate a paper example as CSV files with a manifest."""
    t0 = time.time()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = _config_from_flags(seed, restarts, max_iters, workers)
    outputs: list[str] = []
    if figure == "werner-curves":
        lines = ["d,lambda,s_measured_bits,s_state_bits,gap_bits"]
        for d in (2, 3, 4, 5):
            for lam in np.round(np.arange(0, 1.0001, 0.01), 2):
                w = werner_analytic(d, float(lam))
                lines.append(
                    f"{d},{lam:.2f},{w.s_measured_bits:.9f},{w.s_state_bits:.9f},{w.gap_bits:.9f}"
                )
        path = out_dir / "werner_curves.csv"
        path.write_text("\n".join(lines) + "\n")
        outputs.append(str(path))
    elif figure == "multipartite-scan":
        for name in ("ghz(4)", "w(4)", "two-bell"):
            rho = _parse_state_spec(name)
            stem = name.replace("(", "").replace(")", "").replace(",", "_")
            scan_res = scan_partitions(rho, "lostar", cfg, state_name=name)
            path = out_dir / f"scan_{stem}.csv"
            path.write_text(scan_res.to_csv())
            outputs.append(str(path))
            rob = robustness_scan(rho, "lostar", cfg)
            path = out_dir / f"robustness_{stem}.csv"
            path.write_text(robustness_to_csv(name, "lostar", rob))
            outputs.append(str(path))
    elif figure == "trine":
        rho = _parse_state_spec("trine")
        part = PartitionSpec.full(2)
        rows = ["class,gap_bits"]
        rows.append(f"lostar,{minimize_lostar(rho, part, cfg).gap_bits:.9f}")
        rows.append(f"lo,{minimize_lo(rho, part, cfg).gap_bits:.9f}")
        path = out_dir / "trine.csv"
        path.write_text("\n".join(rows) + "\n")
        outputs.append(str(path))
    else:  # w-family
        rows = ["n,gap_bits"]
        for n in (2, 3, 4):
            rho = _parse_state_spec(f"w({n})")
            res = minimize_lostar(rho, PartitionSpec.full(n), cfg)
            rows.append(f"{n},{res.gap_bits:.9f}")
        path = out_dir / "w_family.csv"
        path.write_text("\n".join(rows) + "\n")
        outputs.append(str(path))
    manifest = RunManifest(
        command=" ".join(sys.argv),
        config={"seed": seed, "restarts": restarts, "max_iters": max_iters, "workers": workers},
        seed=seed,
        version=__version__,
        wall_time_s=time.time() - t0,
        outputs=outputs,
    )
    _write_manifest(out_dir / f"{figure}.manifest.json", manifest)
    for o in outputs:
        click.echo(o)
    sys.exit(EXIT_OK)


@main.command()
def catalog():
    """List the named states the CLI can build."""
    for name, (_, desc) in sorted(CATALOG.items()):
        click.echo(f"{name:16s} {desc}")
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
