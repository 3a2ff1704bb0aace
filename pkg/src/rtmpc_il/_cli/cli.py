"""Command-line interface for rtmpc_il."""

import click
from rich.console import Console

from .. import __version__
from .._core.config import config_hash, resolve_config_path
from .._core.errors import ConfigError
from .utils import load_run_config, setup_logging

console = Console()


class AliasedGroup(click.Group):
    """Click group that supports command aliases."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._aliases = {}

    def command(self, *args, aliases=None, **kwargs):
        """Decorator that registers aliases for commands."""

        def decorator(f):
            cmd = super(AliasedGroup, self).command(*args, **kwargs)(f)
            if aliases:
                for alias in aliases:
                    self._aliases[alias] = cmd.name
            return cmd

        return decorator

    def get_command(self, ctx, cmd_name):
        """Resolve aliases to actual commands."""
        cmd_name = self._aliases.get(cmd_name, cmd_name)
        return super().get_command(ctx, cmd_name)

    def format_commands(self, ctx, formatter):
        """Format commands with aliases shown inline."""
        commands = []
        for subcommand in self.list_commands(ctx):
            cmd = self.get_command(ctx, subcommand)
            if cmd is None or cmd.hidden:
                continue
            aliases = [a for a, c in self._aliases.items() if c == subcommand]
            name = f"{subcommand} ({', '.join(aliases)})" if aliases else subcommand
            commands.append((name, cmd.get_short_help_str(limit=50)))

        if commands:
            with formatter.section("Commands"):
                formatter.write_dl(commands)


CONTEXT_SETTINGS = {"help_option_names": ["-h", "--help"]}


def _print_recursive_help(ctx, param, value):
    """Callback for --help-recursive flag."""
    if not value or ctx.resilient_parsing:
        return

    def _print_command_help(cmd, prefix: str, parent_ctx):
        console.print(f"\n[bold cyan]━━━ {prefix} ━━━[/bold cyan]")
        sub_ctx = click.Context(cmd, info_name=prefix.split()[-1], parent=parent_ctx)
        console.print(cmd.get_help(sub_ctx))

        if isinstance(cmd, click.Group):
            for sub_name, sub_cmd in sorted(cmd.commands.items()):
                _print_command_help(sub_cmd, f"{prefix} {sub_name}", sub_ctx)

    console.print("[bold cyan]━━━ rtmpc-il ━━━[/bold cyan]")
    console.print(ctx.get_help())
    for name, cmd in sorted(cli.commands.items()):
        _print_command_help(cmd, f"rtmpc-il {name}", ctx)

    ctx.exit(0)


@click.group(cls=AliasedGroup, context_settings=CONTEXT_SETTINGS)
@click.help_option("-h", "--help")
@click.version_option(version=__version__, prog_name="rtmpc-il", message="%(prog)s %(version)s")
@click.option(
    "-V",
    "--show-version",
    is_flag=True,
    is_eager=True,
    expose_value=False,
    callback=lambda ctx, _p, v: (click.echo(__version__), ctx.exit(0))
    if v and not ctx.resilient_parsing
    else None,
    help="Show the version and exit.",
)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="YAML run configuration")
@click.option(
    "--set",
    "overrides",
    multiple=True,
    metavar="SECTION.KEY=VALUE",
    help="Override one config value (repeatable)",
)
@click.option("-o", "--output-dir", type=click.Path(file_okay=False), help="Run directory")
@click.option("-j", "--workers", type=int, help="Worker processes for sweeps [env: RTMPC_IL_WORKERS]")
@click.option("--seed", type=int, help="Master seed")
@click.option("-v", "--verbose", count=True, help="More log output (-v debug)")
@click.option("-q", "--quiet", is_flag=True, help="Only warnings and errors")
@click.option(
    "--json",
    "as_json",
    is_flag=True,
    help="Emit machine-readable JSON output (propagated to subcommands).",
)
@click.option(
    "--help-recursive",
    is_flag=True,
    is_eager=True,
    expose_value=False,
    callback=_print_recursive_help,
    help="Show help for all commands recursively.",
)
@click.pass_context
def cli(ctx, config_path, overrides, output_dir, workers, seed, verbose, quiet, as_json):
    """Robust tube MPC experts and their imitation-learned policies.

    \b
    Configuration precedence:
      --config -> ./rtmpc-il.yaml -> $RTMPC_IL_CONFIG -> defaults, then --set

    \b
    Typical session:
      rtmpc-il tube
      rtmpc-il train -m bc+sa_sparse -n 1
      rtmpc-il eval -c <run>/checkpoints/bc_sa_sparse_demo001.json
      rtmpc-il compare -n 10 -s 5 -e 10
    """
    ctx.ensure_object(dict)
    ctx.obj.update(
        config_path=config_path,
        overrides=tuple(overrides),
        output_dir=output_dir,
        workers=workers,
        seed=seed,
        as_json=as_json,
    )
    setup_logging(verbose, quiet or as_json)


from .compare import compare_cmd
from .experiment import eval_cmd, train_cmd, tube_cmd

cli.add_command(tube_cmd)
cli.add_command(train_cmd)
cli.add_command(eval_cmd)
cli.add_command(compare_cmd)
cli._aliases["evaluate"] = eval_cmd.name
cli._aliases["sweep"] = compare_cmd.name


@cli.command("show-config", aliases=["config"], context_settings=CONTEXT_SETTINGS)
@click.option("--json", "as_json", is_flag=True, help="Output as JSON")
@click.pass_context
def show_config(ctx, as_json):
    """Show the resolved configuration, its hash and the run directory.

    \b
    Example:
      $ rtmpc-il show-config
      $ rtmpc-il --set il.epochs=10 show-config --json
    """
    import json
    import os

    cfg = load_run_config(ctx)
    try:
        source = resolve_config_path(ctx.obj.get("config_path"))
    except ConfigError:
        source = None
    info = {
        "config_file": str(source) if source else None,
        "config_hash": config_hash(cfg),
        "run_dir": str(cfg.layout().root),
        "workers": cfg.worker_count(),
        "version": __version__,
        "config": cfg.to_dict(),
    }
    if as_json or ctx.obj.get("as_json"):
        click.echo(json.dumps(info, indent=2))
        return

    click.secho("rtmpc-il - Configuration", fg="cyan", bold=True)
    click.echo("=" * 50)
    click.echo(f"Config file: {info['config_file'] or '(defaults)'}")
    click.echo(f"Config hash: {info['config_hash']}")
    click.echo(f"Run dir:     {info['run_dir']}")
    click.echo(f"Workers:     {info['workers']}")
    click.echo()
    click.echo("Environment Variables:")
    for var in ("RTMPC_IL_CONFIG", "RTMPC_IL_OUTPUT_ROOT", "RTMPC_IL_WORKERS", "SCITEX_DIR"):
        value = os.environ.get(var)
        click.echo(f"  {var}={value}" if value else f"  {var} (not set)")
    click.echo()
    click.echo(cfg.to_yaml())


# Wire install-shell-completion + print-shell-completion from scitex-dev.
try:
    from scitex_dev._cli._completion import attach_shell_completion

    attach_shell_completion(cli, prog_name="rtmpc-il")
except ImportError:
    pass


def main():
    """Entry point for CLI."""
    cli()


if __name__ == "__main__":
    main()


# EOF
