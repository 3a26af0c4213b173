"""Command-line surface: sweeps, ACE fits, saliency maps, tau, training, and
synthetic data, each persisting delimited outputs plus rendered figures.

Exit codes: 0 success, 2 bad flags, 3 unreadable/unparsable input files,
4 numerical failure, 5 ill-conditioned regression fit.
"""
from __future__ import annotations

import csv
import pathlib

import click
import numpy as np

from . import effects, moments, train as training
from .errors import CausalAttrError, IllConditionedFitError, SerializationError
from .nets import GruNetwork, Network, load_network, save_network
from .regressor import fit_regressor, save_regressor

__all__ = ["main"]


class _FileError(click.ClickException):
    exit_code = 3


class _NumericalError(click.ClickException):
    exit_code = 4


class _FitFailure(click.ClickException):
    exit_code = 5


def _load_net(path):
    try:
        return load_network(path)
    except CausalAttrError as exc:
        raise _FileError(str(exc)) from exc


def _load_data_for(net, path, domains=None):
    try:
        if isinstance(net, GruNetwork):
            return moments.load_sequence_dataset(path, domains)
        return moments.load_dataset(path, domains)
    except CausalAttrError as exc:
        raise _FileError(str(exc)) from exc


def _run(op_name, fn):
    try:
        return fn()
    except IllConditionedFitError as exc:
        raise _FitFailure(f"{op_name}: {exc}") from exc
    except CausalAttrError as exc:
        raise _NumericalError(f"{op_name}: {exc}") from exc


def _fig_path(output, suffix=".png"):
    p = pathlib.Path(output)
    return str(p.with_name(p.stem + suffix))


def _do_sweep(net, data, feature, step, out_step, num, method, output_index,
              eps, low, high):
    if isinstance(net, GruNetwork):
        if step is None:
            raise click.UsageError("--step is required for recurrent networks")
        t_out = step if out_step is None else out_step
        return _run("sweep_recurrent", lambda: effects.sweep_recurrent(
            net, data, feature, step, t_out, num=num, output_index=output_index,
            method=method, eps=eps, low=low, high=high,
        ))
    if step is not None or out_step is not None:
        raise click.UsageError("--step/--out-step only apply to recurrent networks")
    return _run("sweep_feedforward", lambda: effects.sweep_feedforward(
        net, data, feature, num=num, output_index=output_index, method=method,
        eps=eps, low=low, high=high,
    ))


_sweep_options = [
    click.option("--net", "net_path", required=True, type=click.Path(exists=True),
                 help="Network JSON document."),
    click.option("--data", "data_path", required=True, type=click.Path(exists=True),
                 help="Dataset CSV (sequence CSV for recurrent networks)."),
    click.option("--domains", "domains_path", type=click.Path(exists=True),
                 help="Optional JSON sidecar {feature: [low, high]}."),
    click.option("--feature", required=True, help="Feature name to intervene on."),
    click.option("--step", type=int, default=None,
                 help="Intervention step t for recurrent networks."),
    click.option("--out-step", type=int, default=None,
                 help="Output step for recurrent networks (default: --step)."),
    click.option("--num", default=50, show_default=True, help="Grid size."),
    click.option("--method", default="exact", show_default=True,
                 type=click.Choice(["exact", "approx", "oracle"]),
                 help="exact Taylor, directional approximation, or enumeration."),
    click.option("--output-index", default=0, show_default=True,
                 help="Network output component."),
    click.option("--eps", default=1e-6, show_default=True,
                 help="Step size for the directional approximation."),
    click.option("--low", type=float, default=None, help="Domain low override."),
    click.option("--high", type=float, default=None, help="Domain high override."),
    click.option("--output", required=True, type=click.Path(),
                 help="Destination CSV; a .png figure lands next to it."),
]


def _with_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn
    return wrap


@click.group()
def main():
    """Causal attributions for small networks via interventional sweeps."""


@main.command("sweep")
@_with_options(_sweep_options)
def cmd_sweep(net_path, data_path, domains_path, feature, step, out_step, num,
              method, output_index, eps, low, high, output):
    """Interventional-expectation sweep for one feature; writes CSV + figure."""
    net = _load_net(net_path)
    data = _load_data_for(net, data_path, domains_path)
    sweep = _do_sweep(net, data, feature, step, out_step, num, method,
                      output_index, eps, low, high)
    _run("write_sweep_csv", lambda: effects.write_sweep_csv(output, sweep))
    from . import plotting

    plotting.save_sweep_figure(_fig_path(output), sweep, title=f"do({feature}=alpha)")
    click.echo(f"wrote {output} and {_fig_path(output)}")


@main.command("ace")
@_with_options(_sweep_options)
@click.option("--max-order", default=10, show_default=True,
              help="Largest polynomial order considered.")
@click.option("--alpha-at", "alpha_at", type=float, multiple=True,
              help="Report ACE at these alpha values (repeatable).")
@click.option("--regressor-out", type=click.Path(), default=None,
              help="Regressor JSON destination (default: <output>.regressor.json).")
def cmd_ace(net_path, data_path, domains_path, feature, step, out_step, num,
            method, output_index, eps, low, high, output, max_order, alpha_at,
            regressor_out):
    """Sweep + causal-regressor fit; writes ACE CSV, regressor JSON, figures."""
    net = _load_net(net_path)
    data = _load_data_for(net, data_path, domains_path)
    sweep = _do_sweep(net, data, feature, step, out_step, num, method,
                      output_index, eps, low, high)
    reg = _run("fit_regressor", lambda: fit_regressor(
        sweep.grid.alphas, sweep.ie, max_order=max_order
    ))
    _run("write_sweep_csv", lambda: effects.write_sweep_csv(output, sweep, reg))
    reg_path = regressor_out or f"{output}.regressor.json"
    save_regressor(reg, reg_path)
    from . import plotting

    plotting.save_sweep_figure(_fig_path(output), sweep, reg,
                               title=f"do({feature}=alpha)")
    ace_fig = _fig_path(output, ".ace.png")
    plotting.save_ace_figure(ace_fig, reg, title=f"ACE of {feature}")
    click.echo(f"wrote {output}, {reg_path}, {_fig_path(output)}, {ace_fig}")
    for alpha in alpha_at:
        res = _run("ace_at", lambda: effects.ace_at(reg, alpha))
        click.echo(
            f"alpha={alpha!r} ie={res.ie!r} ace={res.ace!r} "
            f"variance={res.predictive_variance!r}"
        )


@main.command("saliency")
@click.option("--net", "net_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--domains", "domains_path", type=click.Path(exists=True))
@click.option("--instance-index", default=0, show_default=True,
              help="Row (or sequence) of the dataset to explain.")
@click.option("--out-step", type=int, default=None,
              help="Recurrent horizon; instance truncated to steps 0..out-step "
                   "(default: shortest sequence).")
@click.option("--num", default=50, show_default=True)
@click.option("--method", default="exact", show_default=True,
              type=click.Choice(["exact", "approx", "oracle"]))
@click.option("--output-index", default=0, show_default=True)
@click.option("--max-order", default=10, show_default=True)
@click.option("--threshold/--no-threshold", default=False,
              help="Clip negative attributions to zero.")
@click.option("--output", required=True, type=click.Path(),
              help="Destination CSV; .pgm and .png land next to it.")
def cmd_saliency(net_path, data_path, domains_path, instance_index, out_step,
                 num, method, output_index, max_order, threshold, output):
    """Per-feature (or step-by-feature) ACE map of one instance."""
    net = _load_net(net_path)
    data = _load_data_for(net, data_path, domains_path)
    if isinstance(net, GruNetwork):
        if not 0 <= instance_index < data.n:
            raise click.UsageError(f"--instance-index outside 0..{data.n - 1}")
        horizon = min(s.shape[0] for s in data.sequences) - 1
        if out_step is not None:
            horizon = out_step
        instance = data.sequences[instance_index][: horizon + 1]
    else:
        if not 0 <= instance_index < data.n:
            raise click.UsageError(f"--instance-index outside 0..{data.n - 1}")
        instance = data.rows[instance_index]
    smap = _run("saliency", lambda: effects.saliency(
        net, data, instance, output_index=output_index, num=num, method=method,
        max_order=max_order, threshold=threshold,
    ))
    effects.write_saliency_csv(output, smap, data.feature_names)
    pgm = _fig_path(output, ".pgm")
    effects.write_pgm(pgm, smap)
    from . import plotting

    png = _fig_path(output)
    plotting.save_saliency_figure(png, smap, data.feature_names,
                                  title=f"instance {instance_index}")
    click.echo(f"wrote {output}, {pgm}, {png}")


@main.command("tau")
@click.option("--net", "net_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--step", type=int, default=None,
              help="Output step t (default: last step every sequence reaches).")
@click.option("--output-index", type=int, default=None,
              help="Output component (default: full Jacobian measure).")
@click.option("--tol", default=1e-8, show_default=True)
def cmd_tau(net_path, data_path, step, output_index, tol):
    """Print the estimated lookback window of a recurrent network."""
    net = _load_net(net_path)
    if not isinstance(net, GruNetwork):
        raise click.UsageError("tau requires a recurrent network document")
    data = _load_data_for(net, data_path)
    t = step if step is not None else min(s.shape[0] for s in data.sequences) - 1
    value = _run("tau", lambda: effects.tau(net, data, t, output_index, tol))
    click.echo(str(value))


@main.command("train")
@click.option("--task", required=True, type=click.Choice(["mlp", "gru"]))
@click.option("--data", "data_path", required=True,
              help="Dataset CSV; 'builtin:iris' loads the packaged table.")
@click.option("--labels", "labels_path", default=None, type=click.Path(exists=True),
              help="Labels CSV: 'label' column (mlp) or seq_id,label (gru). "
                   "Implied for builtin:iris.")
@click.option("--hidden", multiple=True, type=int,
              help="Hidden layer sizes (mlp, repeatable; default 16).")
@click.option("--hidden-dim", default=1, show_default=True, help="GRU width.")
@click.option("--activation", default="relu", show_default=True)
@click.option("--epochs", default=2000, show_default=True)
@click.option("--lr", default=0.05, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--normalize/--no-normalize", default=False,
              help="Min-max scale features to [0, 1] before training (mlp).")
@click.option("--net-out", required=True, type=click.Path())
@click.option("--log", "log_path", type=click.Path(), default=None,
              help="Training-log CSV; a .png curve lands next to it.")
def cmd_train(task, data_path, labels_path, hidden, hidden_dim, activation,
              epochs, lr, seed, normalize, net_out, log_path):
    """Train a network deterministically and persist it as JSON."""
    if task == "mlp":
        if data_path == "builtin:iris":
            data, labels = training.iris_dataset(normalized=normalize)
        else:
            try:
                data = moments.load_dataset(data_path)
                labels = _read_label_column(labels_path)
            except (CausalAttrError, OSError, ValueError) as exc:
                raise _FileError(str(exc)) from exc
            if normalize:
                rows = data.rows
                lo, hi = rows.min(axis=0), rows.max(axis=0)
                span = np.where(hi > lo, hi - lo, 1.0)
                data = moments.Dataset((rows - lo) / span, data.feature_names)
        net, history = _run("train_mlp", lambda: training.train_mlp(
            data, labels, hidden=tuple(hidden) or (16,), activation=activation,
            epochs=epochs, lr=lr, seed=seed,
        ))
    else:
        if data_path == "builtin:iris":
            raise click.UsageError("builtin:iris is a feedforward dataset")
        try:
            data = moments.load_sequence_dataset(data_path)
            labels = _read_sequence_labels(labels_path, data.n)
        except (CausalAttrError, OSError, ValueError) as exc:
            raise _FileError(str(exc)) from exc
        net, history = _run("train_gru", lambda: training.train_gru(
            data, labels, hidden_dim=hidden_dim, epochs=epochs, lr=lr, seed=seed,
        ))
    save_network(net, net_out)
    final = history[-1] if history else (0, float("nan"), float("nan"))
    click.echo(f"wrote {net_out} (final loss {final[1]:.6g}, accuracy {final[2]:.4f})")
    if log_path:
        training.write_training_log(log_path, history)
        from . import plotting

        plotting.save_training_figure(_fig_path(log_path), history)
        click.echo(f"wrote {log_path} and {_fig_path(log_path)}")


def _read_label_column(path):
    if path is None:
        raise click.UsageError("--labels is required for CSV datasets")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0].strip() != "label":
            raise SerializationError(f"{path}: expected a 'label' header column")
        return np.array([int(float(row[0])) for row in reader if row])


def _read_sequence_labels(path, n):
    if path is None:
        raise click.UsageError("--labels is required for sequence datasets")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["seq_id", "label"]:
            raise SerializationError(f"{path}: expected seq_id,label columns")
        pairs = {int(float(row[0])): int(float(row[1])) for row in reader if row}
    try:
        return np.array([pairs[i] for i in range(n)])
    except KeyError as exc:
        raise SerializationError(f"{path}: missing label for sequence {exc}") from exc


@main.command("synth")
@click.option("--n", required=True, type=int, help="Number of sequences.")
@click.option("--seed", default=0, show_default=True)
@click.option("--output", required=True, type=click.Path(),
              help="Sequence CSV destination.")
@click.option("--labels-out", required=True, type=click.Path(),
              help="seq_id,label CSV destination.")
def cmd_synth(n, seed, output, labels_out):
    """Generate the two-class synthetic sequence benchmark."""
    data, labels = _run("synth_sequences", lambda: training.synth_sequences(n, seed))
    moments.save_sequence_dataset(data, output)
    with open(labels_out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seq_id", "label"])
        for sid, label in enumerate(labels):
            writer.writerow([sid, int(label)])
    click.echo(f"wrote {output} and {labels_out}")


if __name__ == "__main__":
    main()
