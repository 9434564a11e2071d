"""Command-line front end.

`cpsim run` executes one experiment and writes a run log (JSON or CSV);
`cpsim reproduce <table>` re-runs a preset experiment grid and writes its
CSV next to a rendered figure.  Exit codes: 0 success, 1 usage error,
2 ALS failure.
"""

from __future__ import annotations

import json
import math
import os
import sys

import click
import numpy as np

from . import circuits as cc
from .driver import (RunConfig, run_grover, run_phase_estimation, run_walk,
                     simulate)
from .reduction import AlsConfig, AlsDegenerateError
from .state import basis_state, random_rank1_state, uniform_state

ALGS = ["qft", "qft-random", "phase", "grover", "walk"]
GRAPHS = ["complete-loops", "bipartite", "cyclic", "complete"]
STRATEGIES = ["direct", "als", "direct-then-als"]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(round(float(v), 12))
    return str(v)


def _draw_marked(rng, n, count):
    big = 2 ** n
    if count > big:
        raise click.UsageError("more marked items than basis states")
    out, seen = [], set()
    while len(out) < count:
        v = int(rng.integers(big))
        if v not in seen:
            seen.add(v)
            out.append(v)
    return [format(v, "0%db" % n) for v in out]


def _parse_marked(raw, n):
    items = []
    for tok in raw.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if set(tok) <= {"0", "1"} and len(tok) == n:
            items.append(tok)
        else:
            items.append(format(int(tok), "0%db" % n))
    if not items:
        raise click.UsageError("--marked is empty")
    return items


def _parse_input(raw, n, seed):
    if raw in (None, "h"):
        return uniform_state(n)
    if raw == "random-rank1":
        return random_rank1_state(n, np.random.default_rng([seed]))
    if raw.startswith("basis:"):
        idx = int(raw.split(":", 1)[1])
        if not 0 <= idx < 2 ** n:
            raise click.UsageError("basis index out of range")
        return basis_state(n, format(idx, "0%db" % n))
    raise click.UsageError("bad --input %r" % raw)


def _walk_spec(graph, qubits, marked, cycle_m, seed):
    if graph in ("complete-loops", "cyclic", "complete"):
        if qubits % 2 != 0 or qubits < 2:
            raise click.UsageError("walk on %s needs an even qubit count"
                                   % graph)
        nv = qubits // 2
    else:
        if qubits % 2 != 0 or qubits < 4:
            raise click.UsageError("bipartite walk needs 2*n1 + 2 qubits")
        nv = (qubits - 2) // 2
    if marked is not None:
        xs = _parse_marked(marked, nv)
        if len(xs) != 1:
            raise click.UsageError("walk search takes one marked vertex")
        xstar = xs[0]
    else:
        xstar = format(int(np.random.default_rng([seed]).integers(2 ** nv)),
                       "0%db" % nv)
    family = {"complete-loops": "complete_with_loops",
              "bipartite": "complete_bipartite",
              "cyclic": "cyclic", "complete": "cyclic"}[graph]
    m = 1 if graph == "complete" else cycle_m
    return cc.WalkSpec(family, nv, xstar, m)


def _run_log_csv(doc):
    lines = ["section,layer,rank_in,rank_out,fidelity,method,"
             "fidelity_estimate,marked_probability,rank"]
    for r in doc["per_layer"]:
        lines.append("layer,%d,%d,%d,%s,%s,,," % (
            r["layer"], r["rank_in"], r["rank_out"],
            _fmt(r["fidelity"]), r["method"]))
    res = doc["result"]
    lines.append("result,,,,,,%s,%s,%d" % (
        _fmt(res["fidelity_estimate"]), _fmt(res["marked_probability"]),
        res["rank"]))
    return "\n".join(lines) + "\n"


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@click.group()
def cli():
    """Low-rank CP simulation of quantum circuits."""


@cli.command("run")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON file with default flag values; flags override it.")
@click.option("--alg", type=click.Choice(ALGS), default=None)
@click.option("--qubits", type=int, default=None)
@click.option("--input", "input_spec", default=None,
              help="basis:<idx> | random-rank1 | h")
@click.option("--theta", type=float, default=None,
              help="phase estimation angle in [0, 1)")
@click.option("--marked", default=None,
              help="comma-separated marked items (bit-strings or integers)")
@click.option("--marked-count", type=int, default=None,
              help="draw this many distinct marked items from the seed")
@click.option("--graph", type=click.Choice(GRAPHS), default=None)
@click.option("--cycle-m", type=int, default=None,
              help="cyclic walk parameter m (a = 2^m - 1)")
@click.option("--rank-limit", type=int, default=None,
              help="intermediate CP rank cap; omit for exact simulation")
@click.option("--strategy", type=click.Choice(STRATEGIES), default=None)
@click.option("--als-restarts", type=int, default=None)
@click.option("--als-sweeps", type=int, default=None)
@click.option("--als-tol", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--iterations", type=int, default=None,
              help="override the grover/walk iteration count")
@click.option("--verify-dense", is_flag=True, default=False,
              help="track a dense shadow state and report its fidelity")
@click.option("--dump-state", default=None, type=click.Path(dir_okay=False),
              help="write the final CP state as JSON to this path")
@click.option("--dump-circuit", default=None, type=click.Path(dir_okay=False),
              help="write the circuit (one step for grover/walk) as JSON")
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
              default=None)
def cmd_run(config_path, **kw):
    """Run one experiment and write its run log."""
    if config_path:
        with open(config_path) as fh:
            file_cfg = json.load(fh)
        for key, val in file_cfg.items():
            key = key.replace("-", "_")
            if key == "input":
                key = "input_spec"
            if key == "format":
                key = "fmt"
            if key not in kw:
                raise click.UsageError("unknown config key %r" % key)
            if kw[key] in (None, False):
                kw[key] = val

    alg = kw["alg"]
    if alg is None:
        raise click.UsageError("--alg is required")
    qubits = kw["qubits"]
    if qubits is None or qubits < 1:
        raise click.UsageError("--qubits is required and must be positive")
    seed = kw["seed"] if kw["seed"] is not None else 0
    strategy = (kw["strategy"] or "direct").replace("-", "_")
    rank_limit = kw["rank_limit"]
    als = AlsConfig(rank=rank_limit if rank_limit else 2,
                    max_sweeps=kw["als_sweeps"] or 100,
                    tol=kw["als_tol"] if kw["als_tol"] is not None else 1e-10,
                    restarts=kw["als_restarts"] or 3,
                    seed=[seed])
    config = RunConfig(r_max=rank_limit, strategy=strategy, als=als,
                       verify_dense=kw["verify_dense"])

    experiment = {"alg": alg, "qubits": qubits, "seed": seed}
    if alg in ("qft", "qft-random"):
        spec = "random-rank1" if alg == "qft-random" else kw["input_spec"]
        state = _parse_input(spec, qubits, seed)
        circuit = cc.build_qft(qubits)
        result = simulate(state, circuit, config)
        experiment["input"] = spec or "h"
    elif alg == "phase":
        theta = kw["theta"]
        if theta is None:
            theta = 0.5 * (1.0 + 2.0 ** -qubits)
        circuit = cc.build_inverse_qft(qubits)
        result = run_phase_estimation(qubits, theta, config)
        experiment["theta"] = theta
    elif alg == "grover":
        if kw["marked"] is not None:
            marked = _parse_marked(kw["marked"], qubits)
        else:
            count = kw["marked_count"] or 1
            marked = _draw_marked(np.random.default_rng([seed]), qubits, count)
        circuit = cc.grover_step_circuit(qubits, marked)
        result = run_grover(qubits, marked, config,
                            iterations=kw["iterations"])
        experiment["marked"] = marked
    elif alg == "walk":
        graph = kw["graph"]
        if graph is None:
            raise click.UsageError("--graph is required for walks")
        wspec = _walk_spec(graph, qubits, kw["marked"], kw["cycle_m"] or 1,
                           seed)
        circuit, _ = cc.build_walk(wspec)
        result = run_walk(wspec, config, iterations=kw["iterations"])
        experiment.update({"graph": graph, "xstar": wspec.xstar})
    else:  # pragma: no cover - click restricts the choices
        raise click.UsageError("unknown algorithm %r" % alg)

    doc = result.to_json(config)
    doc["config"]["experiment"] = experiment
    if kw["dump_state"]:
        with open(kw["dump_state"], "w") as fh:
            json.dump(result.state.to_json(), fh)
    if kw["dump_circuit"]:
        with open(kw["dump_circuit"], "w") as fh:
            json.dump(circuit.to_json(), fh)

    if (kw["fmt"] or "json") == "json":
        _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", kw["out"])
    else:
        _emit(_run_log_csv(doc), kw["out"])


# ---------------------------------------------------------------------------
# Table presets


def _qft_basis_row(n):
    result = simulate(basis_state(n, "0" * n), cc.build_qft(n),
                      RunConfig(r_max=1, strategy="direct"))
    return {"qubits": n, "rank_limit": 1,
            "fidelity_estimate": result.fidelity_estimate}


def _qft_random_row(n, r, seed):
    state = random_rank1_state(n, np.random.default_rng([seed, n]))
    als = AlsConfig(rank=r, max_sweeps=8, tol=1e-8, restarts=3,
                    seed=[seed, n])
    result = simulate(state, cc.build_qft(n),
                      RunConfig(r_max=r, strategy="als", als=als))
    return {"qubits": n, "rank_limit": r,
            "fidelity_estimate": result.fidelity_estimate}


def _phase_row(n, seed):
    theta = 0.5 * (1.0 + 2.0 ** -n)
    als = AlsConfig(rank=20, max_sweeps=50, tol=1e-12, restarts=3,
                    seed=[seed, n])
    result = run_phase_estimation(
        n, theta, RunConfig(r_max=20, strategy="als", als=als))
    return {"qubits": n, "rank_limit": 20,
            "fidelity_estimate": result.fidelity_estimate}


def _grover_row(n, a, seed, strategy, r, restarts=3, idx=0):
    rng = np.random.default_rng([seed, idx])
    marked = _draw_marked(rng, n, a)
    # Early sweep termination can freeze the tiny marked-item component
    # before it is resolved, so the Grover presets run fixed-length sweeps.
    als = AlsConfig(rank=r, max_sweeps=100, tol=0.0, restarts=restarts,
                    seed=[seed, idx])
    result = run_grover(n, marked,
                        RunConfig(r_max=r, strategy=strategy, als=als))
    return {"qubits": n, "marked_count": a, "rank_limit": r,
            "als_restarts": restarts if strategy == "als" else "",
            "marked_probability": result.marked_probability,
            "fidelity_estimate": result.fidelity_estimate}


def _walk_row(graph, qubits, r, seed, strategy, idx=0):
    wspec = _walk_spec(graph, qubits, None, 1, seed * 1000 + idx)
    als = AlsConfig(rank=r, max_sweeps=50, tol=1e-12, restarts=3,
                    seed=[seed, idx])
    result = run_walk(wspec, RunConfig(r_max=r, strategy=strategy, als=als))
    return {"qubits": qubits, "rank_limit": r,
            "fidelity_estimate": result.fidelity_estimate,
            "marked_probability": result.marked_probability}


SKIPPED = "skipped: beyond desk scale"


def _table_t2(seed):
    rows = [_qft_basis_row(n) for n in (18, 20, 22, 24, 26, 28, 30, 32, 40, 60)]
    return ["qubits", "rank_limit", "fidelity_estimate"], rows, \
        ("fidelity_estimate", "QFT, standard-basis input")


def _table_t4(seed):
    rows = []
    for n, r in ((16, 256), (20, 256), (24, 256), (26, 256), (27, 256),
                 (28, 256), (40, 1024), (40, 2048)):
        if n <= 20:
            rows.append(_qft_random_row(n, r, seed))
        else:
            rows.append({"qubits": n, "rank_limit": r,
                         "fidelity_estimate": SKIPPED})
    return ["qubits", "rank_limit", "fidelity_estimate"], rows, \
        ("fidelity_estimate", "QFT, random rank-1 input")


def _table_t5(seed):
    rows = [_phase_row(n, seed)
            for n in (18, 20, 22, 24, 26, 28, 30, 32, 40, 60)]
    return ["qubits", "rank_limit", "fidelity_estimate"], rows, \
        ("fidelity_estimate", "Phase estimation, rank limit 20")


def _table_t6(seed):
    grid = [(8, 1, 3), (10, 1, 3), (12, 1, 3), (14, 1, 3), (16, 1, 3),
            (16, 1, 10), (8, 20, 3), (10, 20, 3), (12, 20, 3), (14, 20, 3),
            (16, 20, 3)]
    rows = [_grover_row(n, a, seed, "als", 2, restarts=k, idx=i)
            for i, (n, a, k) in enumerate(grid)]
    return ["qubits", "marked_count", "rank_limit", "als_restarts",
            "marked_probability", "fidelity_estimate"], rows, \
        ("marked_probability", "Grover with CP-ALS, rank limit 2")


def _table_t7(seed):
    rows = [_grover_row(n, 1, seed, "direct", 2, idx=i)
            for i, n in enumerate((8, 10, 12, 14, 16))]
    return ["qubits", "marked_count", "rank_limit", "marked_probability",
            "fidelity_estimate"], rows, \
        ("marked_probability", "Grover with direct CPD, small circuits")


def _table_t8(seed):
    rows = []
    grid = [(10, 1), (15, 1), (20, 1), (25, 1), (30, 1),
            (10, 20), (15, 20), (20, 20), (25, 20), (30, 20)]
    for i, (n, a) in enumerate(grid):
        if n >= 30:
            rows.append({"qubits": n, "marked_count": a,
                         "rank_limit": a + 1,
                         "marked_probability": SKIPPED,
                         "fidelity_estimate": SKIPPED})
        else:
            rows.append(_grover_row(n, a, seed, "direct", a + 1, idx=i))
    return ["qubits", "marked_count", "rank_limit", "marked_probability",
            "fidelity_estimate"], rows, \
        ("marked_probability", "Grover with direct CPD")


def _table_t10(seed):
    rows = [_walk_row("complete-loops", q, 2, seed, "direct", idx=i)
            for i, q in enumerate((12, 16, 20, 24, 28, 32))]
    return ["qubits", "rank_limit", "marked_probability",
            "fidelity_estimate"], rows, \
        ("marked_probability", "Walk on complete graphs with loops")


def _table_t12(seed):
    rows = [_walk_row("bipartite", q, 4, seed, "direct", idx=i)
            for i, q in enumerate((8, 12, 16, 20, 24, 28, 32, 36))]
    return ["qubits", "rank_limit", "marked_probability",
            "fidelity_estimate"], rows, \
        ("marked_probability", "Walk on complete bipartite graphs")


def _table_t13(seed):
    rows = []
    for i, (q, r) in enumerate(((6, 16), (10, 64), (14, 256))):
        if q >= 14:
            rows.append({"qubits": q, "rank_limit": r,
                         "fidelity_estimate": SKIPPED,
                         "marked_probability": SKIPPED})
        else:
            rows.append(_walk_row("complete", q, r, seed, "als", idx=i))
    return ["qubits", "rank_limit", "fidelity_estimate",
            "marked_probability"], rows, \
        ("marked_probability", "Walk on complete graphs, CP-ALS")


TABLES = {"t2": _table_t2, "t4": _table_t4, "t5": _table_t5, "t6": _table_t6,
          "t7": _table_t7, "t8": _table_t8, "t10": _table_t10,
          "t12": _table_t12, "t13": _table_t13}


def _write_figure(path, fields, rows, plot_spec):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ycol, title = plot_spec
    xs, ys = [], []
    for row in rows:
        if row[ycol] == SKIPPED:
            continue
        xs.append(row["qubits"])
        ys.append(row[ycol])
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(xs, ys, "o-")
    ax.set_xlabel("qubits")
    ax.set_ylabel(ycol.replace("_", " "))
    ax.set_title(title)
    ax.set_ylim(-0.02, 1.05)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


@cli.command("reproduce")
@click.argument("table_id", type=click.Choice(sorted(TABLES)))
@click.option("--out", default=".", type=click.Path(file_okay=False),
              help="directory for the CSV (and figure)")
@click.option("--seed", type=int, default=0)
@click.option("--figure/--no-figure", default=True,
              help="also render a PNG of the main column")
def cmd_reproduce(table_id, out, seed, figure):
    """Re-run a preset experiment grid and write its CSV."""
    fields, rows, plot_spec = TABLES[table_id](seed)
    os.makedirs(out, exist_ok=True)
    csv_path = os.path.join(out, "%s.csv" % table_id)
    lines = [",".join(fields)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(f)) for f in fields))
    with open(csv_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    click.echo(csv_path)
    if figure:
        png_path = os.path.join(out, "%s.png" % table_id)
        _write_figure(png_path, fields, rows, plot_spec)
        click.echo(png_path)


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except AlsDegenerateError as exc:
        click.echo("ALS failure: %s" % exc, err=True)
        sys.exit(2)
    sys.exit(0)


if __name__ == "__main__":
    main()
