"""Comparison sweep command."""

import click
from rich.console import Console
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn
from rich.table import Table

from .. import __version__
from .._core.config import config_hash
from .._core.evalbench import run_comparison
from .._core.export import export_json, save
from .utils import LIBRARY_ERRORS, fail, load_run_config, parse_methods, prepare_expert

console = Console()

CONTEXT_SETTINGS = {"help_option_names": ["-h", "--help"]}


def _fmt(value, pattern: str = "{:.2f}") -> str:
    return "-" if value is None else pattern.format(value)


@click.command("compare", context_settings=CONTEXT_SETTINGS)
@click.option("-m", "--methods", help="Comma-separated methods, e.g. bc+sa_sparse,dagger+none (eval.methods)")
@click.option("-n", "--demos", type=int, help="Largest demonstration count (eval.demo_max)")
@click.option("-s", "--seeds", type=int, help="Seeds per method (eval.seeds)")
@click.option("-e", "--episodes", type=int, help="Evaluation episodes per point (eval.episodes)")
@click.option("--tube", "tube_path", type=click.Path(dir_okay=False), help="Tube artifact to use")
@click.option("--json", "as_json", is_flag=True, help="Output the summary as JSON")
@click.pass_context
def compare_cmd(ctx, methods, demos, seeds, episodes, tube_path, as_json):
    """Run the method comparison over demonstrations, seeds and domains.

    Writes a long-format CSV (one row per method x demo count x domain)
    and a JSON summary with success rate, expert gap and demonstrations
    to full success. Failed cells are reported per method and do not
    change the exit code. Rerunning into the same directory resumes.

    \b
    Example:
      $ rtmpc-il compare -m bc+sa_sparse -n 2 -s 5 -e 10
      $ rtmpc-il --set model.horizon=20 compare
    """
    overrides = []
    names = parse_methods(methods)
    if names is not None:
        overrides.append(f"eval.methods=[{', '.join(names)}]")
    for key, value in (("demo_max", demos), ("seeds", seeds), ("episodes", episodes)):
        if value is not None:
            overrides.append(f"eval.{key}={value}")
    cfg = load_run_config(ctx, overrides)
    layout = cfg.layout()
    cfg.write_resolved(layout)
    task = cfg.to_task()
    method_configs = cfg.method_configs()
    digest = config_hash(cfg)
    n_cells = len(method_configs) * cfg.eval.seeds

    try:
        expert = prepare_expert(cfg, layout, tube_path)
        with Progress(
            TextColumn("[cyan]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            console=console,
            transient=True,
            disable=as_json,
        ) as progress:
            bar = progress.add_task("cells", total=n_cells)
            table = run_comparison(
                task,
                method_configs,
                n_demos_max=cfg.eval.demo_max,
                n_seeds=cfg.eval.seeds,
                eval_episodes=cfg.eval.episodes,
                domains=cfg.eval.domains,
                workers=cfg.worker_count(),
                master_seed=cfg.master_seed,
                tube=expert.tube,
                lqr=expert.lqr,
                job_dir=layout.results / "sweep",
                config_hash=digest,
                version=__version__,
                on_cell=lambda key, error: progress.advance(bar),
            )
    except LIBRARY_ERRORS as e:
        fail(e)

    csv_path = save(table, layout.results / "comparison.csv", format="csv")
    summary = table.summary()
    json_path = save(summary, layout.results / "comparison_summary.json", format="json")

    if as_json or (ctx.find_root().obj or {}).get("as_json"):
        click.echo(export_json(summary, indent=2))
        return
    out = Table(title=f"Method comparison, task {table.task}")
    out.add_column("method")
    out.add_column("domain")
    out.add_column("success", justify="right")
    out.add_column("95% CI", justify="right")
    out.add_column("expert gap %", justify="right")
    out.add_column("demos to 100%", justify="right")
    out.add_column("unsafe demos", justify="right")
    out.add_column("status")
    for res in table.results:
        ci = res.success_ci[-1] if res.success_ci else None
        out.add_row(
            res.method,
            res.domain,
            _fmt(res.success_rate[-1] if res.success_rate else None),
            "-" if ci is None else f"[{ci[0]:.2f}, {ci[1]:.2f}]",
            _fmt(res.expert_gap),
            _fmt(res.demonstrations_to_full_success, "{}"),
            str(res.collection_violations),
            res.status,
        )
    console.print(out)
    failed = [r for r in table.results if r.status != "ok"]
    if failed:
        click.secho(f"{len(failed)} result(s) with failed cells; see {json_path}", fg="yellow", err=True)
    click.secho(f"Saved {csv_path} and {json_path}", fg="green", err=True)


__all__ = ["compare_cmd"]

# EOF
