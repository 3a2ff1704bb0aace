"""Tube, train and eval commands."""

from typing import Optional

import click
from rich.console import Console
from rich.table import Table

from .._core.errors import CheckpointSchemaError, InfeasibleTighteningError
from .._core.evalbench import ExperimentResult, evaluate_policy
from .._core.export import export_json, save
from .._core.il import run_il
from .._core.linmodel import INPUT_NAMES, STATE_NAMES
from .._core.mlp import load_checkpoint, save_checkpoint
from .utils import (
    LIBRARY_ERRORS,
    compute_tube,
    fail,
    file_digest,
    load_run_config,
    prepare_expert,
    run_metadata,
)

console = Console()

CONTEXT_SETTINGS = {"help_option_names": ["-h", "--help"]}


def _as_json(ctx, flag: bool) -> bool:
    return flag or bool((ctx.find_root().obj or {}).get("as_json"))


@click.command("tube", context_settings=CONTEXT_SETTINGS)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="Artifact path (default: <run>/artifacts/tube.json)")
@click.option("--json", "as_json", is_flag=True, help="Output as JSON")
@click.pass_context
def tube_cmd(ctx, out_path: Optional[str], as_json: bool):
    """Compute the LQR gain and the tube box and write the artifact.

    \b
    Example:
      $ rtmpc-il tube
      $ rtmpc-il --set disturbance.w_fraction=0.1 tube --json
    """
    cfg = load_run_config(ctx)
    layout = cfg.layout()
    cfg.write_resolved(layout)
    try:
        tube, lqr, model, W, path = compute_tube(cfg, out_path or layout.tube_artifact)
    except LIBRARY_ERRORS as e:
        fail(e)
    try:
        expert = cfg.to_task().build_expert(tube=tube, lqr=lqr)
    except InfeasibleTighteningError as e:
        fail(f"{e}. The tube artifact was kept at {path}; reduce disturbance.w_fraction or widen the constraints")

    z = tube.z_box
    if _as_json(ctx, as_json):
        click.echo(
            export_json(
                {
                    "artifact": str(path),
                    "z_box": z.to_dict(),
                    "spectral_radius": lqr.spectral_radius,
                    "converged": tube.converged,
                    "state_tight": expert.X_tight.to_dict(),
                    "input_tight": expert.U_tight.to_dict(),
                    **run_metadata(cfg),
                },
                indent=2,
            )
        )
        return

    table = Table(title=f"Tube box (rho(A+BK) = {lqr.spectral_radius:.4f})")
    table.add_column("axis")
    table.add_column("z lower", justify="right")
    table.add_column("z upper", justify="right")
    table.add_column("tightened X", justify="right")
    for i in range(z.dim):
        name = STATE_NAMES[i] if z.dim == len(STATE_NAMES) else f"x{i}"
        table.add_row(
            name,
            f"{z.lower[i]:.5f}",
            f"{z.upper[i]:.5f}",
            f"[{expert.X_tight.lower[i]:.3f}, {expert.X_tight.upper[i]:.3f}]",
        )
    console.print(table)
    for j, name in enumerate(INPUT_NAMES[: expert.U_tight.dim]):
        console.print(f"  tightened {name}: [{expert.U_tight.lower[j]:.3f}, {expert.U_tight.upper[j]:.3f}]")
    if not tube.converged:
        click.secho("Warning: tube envelope had not converged; raise tube.horizon", fg="yellow", err=True)
    click.secho(f"Saved tube artifact to {path}", fg="green", err=True)


@click.command("train", context_settings=CONTEXT_SETTINGS)
@click.option("-m", "--method", help="Method as <bc|dagger>+<none|dr|sa_sparse|sa_dense>")
@click.option("-n", "--demos", type=int, help="Number of demonstrations (il.n_demos)")
@click.option("--epochs", type=int, help="Training epochs per retrain (il.epochs)")
@click.option("--tube", "tube_path", type=click.Path(dir_okay=False), help="Tube artifact to use")
@click.option("--json", "as_json", is_flag=True, help="Output as JSON")
@click.pass_context
def train_cmd(ctx, method, demos, epochs, tube_path, as_json):
    """Collect demonstrations and train a policy after each one.

    \b
    Example:
      $ rtmpc-il train -m bc+sa_sparse -n 1
      $ rtmpc-il train -m dagger+none -n 10 --epochs 50
    """
    overrides = []
    if method is not None:
        name, _, aug = method.partition("+")
        overrides += [f"il.method={name}", f"il.augmentation={aug or 'none'}"]
    if demos is not None:
        overrides.append(f"il.n_demos={demos}")
    if epochs is not None:
        overrides.append(f"il.epochs={epochs}")
    cfg = load_run_config(ctx, overrides)
    layout = cfg.layout()
    cfg.write_resolved(layout)
    il_config = cfg.to_il_config()
    tag = il_config.name.replace("+", "_")
    checkpoints = []

    def _on_demo(i, run):
        policy = run.policies[-1]
        if policy is None:
            return
        path = save_checkpoint(policy, layout.checkpoint(il_config.name, i + 1))
        checkpoints.append({"demos": i + 1, "path": str(path), "sha256": file_digest(path)})

    try:
        expert = prepare_expert(cfg, layout, tube_path)
        run = run_il(il_config, cfg.il.n_demos, cfg.to_task(), expert=expert, on_demo=_on_demo)
    except LIBRARY_ERRORS as e:
        fail(e)

    stats = {
        "method": il_config.name,
        "config": il_config.to_dict(),
        "checkpoints": checkpoints,
        "snapshots": run.snapshots,
        "demonstrations": run.demonstrations,
        "loss_traces": run.loss_traces,
        "collection_violations": run.collection_violations,
        **run_metadata(cfg),
    }
    stats_path = save(stats, layout.results / f"train_{tag}.json", format="json")
    if len(run.dataset):
        save(run.dataset, layout.results / f"dataset_{tag}.csv", format="csv")

    if _as_json(ctx, as_json):
        click.echo(export_json(stats, indent=2))
        return
    table = Table(title=f"Training {il_config.name}")
    table.add_column("demos", justify="right")
    table.add_column("beta", justify="right")
    table.add_column("dataset", justify="right")
    table.add_column("final loss", justify="right")
    table.add_column("violated")
    for demo, snap, losses in zip(run.demonstrations, run.snapshots, run.loss_traces):
        table.add_row(
            str(demo["demo_index"] + 1),
            f"{demo['beta']:.2f}",
            str(snap["size"]),
            f"{losses[-1]:.5f}" if losses else "-",
            "yes" if demo["violated"] else "no",
        )
    console.print(table)
    if checkpoints:
        click.secho(f"Final checkpoint: {checkpoints[-1]['path']}", fg="green", err=True)
    click.secho(f"Saved training stats to {stats_path}", fg="green", err=True)


@click.command("eval", context_settings=CONTEXT_SETTINGS)
@click.option("-c", "--checkpoint", type=click.Path(exists=True, dir_okay=False), help="Policy checkpoint")
@click.option("--expert", "use_expert", is_flag=True, help="Evaluate the RTMPC expert itself")
@click.option(
    "-d",
    "--domain",
    type=click.Choice(["source", "target", "both"]),
    default="both",
    show_default=True,
    help="Evaluation domain",
)
@click.option("-e", "--episodes", type=int, help="Episodes per domain (eval.episodes)")
@click.option("--tube", "tube_path", type=click.Path(dir_okay=False), help="Tube artifact to use")
@click.option("--save-episodes/--no-save-episodes", default=True, show_default=True, help="Write per-episode CSV files")
@click.option("--json", "as_json", is_flag=True, help="Output as JSON")
@click.pass_context
def eval_cmd(ctx, checkpoint, use_expert, domain, episodes, tube_path, save_episodes, as_json):
    """Evaluate a policy checkpoint (or the expert) in source/target domains.

    \b
    Example:
      $ rtmpc-il eval --expert -d source
      $ rtmpc-il eval -c checkpoints/bc_sa_sparse_demo001.json --json
    """
    if bool(checkpoint) == bool(use_expert):
        raise click.UsageError("Give exactly one of --checkpoint or --expert", ctx=ctx)
    overrides = [f"eval.episodes={episodes}"] if episodes is not None else []
    cfg = load_run_config(ctx, overrides)
    layout = cfg.layout()
    cfg.write_resolved(layout)
    task = cfg.to_task()
    domains = ["source", "target"] if domain == "both" else [domain]

    try:
        expert = prepare_expert(cfg, layout, tube_path)
        if use_expert:
            controller, name, demos = expert, "expert", 0
        else:
            controller = load_checkpoint(checkpoint)
            if controller.horizon != task.horizon:
                raise CheckpointSchemaError(
                    f"Checkpoint horizon {controller.horizon} differs from model.horizon {task.horizon}"
                )
            name = controller.metadata.get("method", "policy")
            demos = int(controller.metadata.get("demos", 0))
        metrics, all_episodes = evaluate_policy(
            controller,
            task,
            domains,
            n_episodes=cfg.eval.episodes,
            seed=cfg.master_seed,
            expert=None if use_expert else expert,
            method=name,
        )
    except LIBRARY_ERRORS as e:
        fail(e)

    results = [
        ExperimentResult(
            method=name,
            domain=label,
            demo_counts=[demos],
            success_rate=[m["success_rate"]],
            success_ci=[(m["success_rate"], m["success_rate"])],
            mean_stage_cost=[m["mean_stage_cost"]],
            expert_gap=m.get("expert_gap"),
            seeds=[cfg.master_seed],
        )
        for label, m in metrics.items()
    ]
    tag = name.replace("+", "_")
    doc = {
        "checkpoint": checkpoint,
        "results": [r.to_dict() for r in results],
        "metrics": metrics,
        **run_metadata(cfg),
    }
    out = save(doc, layout.results / f"eval_{tag}.json", format="json")
    if save_episodes:
        for label, eps in all_episodes.items():
            for i, ep in enumerate(eps):
                save(ep, layout.episodes / f"{tag}_{label}_{i:03d}.csv", format="csv")

    if _as_json(ctx, as_json):
        click.echo(export_json(doc, indent=2))
        return
    table = Table(title=f"Evaluation of {name}")
    table.add_column("domain")
    table.add_column("success", justify="right")
    table.add_column("stage cost", justify="right")
    table.add_column("expert gap %", justify="right")
    for label, m in metrics.items():
        gap = m.get("expert_gap")
        table.add_row(
            label,
            f"{m['success_rate']:.2f}",
            f"{m['mean_stage_cost']:.1f}",
            "-" if gap is None else f"{gap:.2f}",
        )
    console.print(table)
    click.secho(f"Saved metrics to {out}", fg="green", err=True)


__all__ = ["tube_cmd", "train_cmd", "eval_cmd"]

# EOF
