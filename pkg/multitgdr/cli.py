import logging

import click
from pydantic import ValidationError

from . import __version__
from .commands import bag, cv, evaluate, fit, pool, predict, replicate, simulate
from .config import LOG_LEVEL
from .errors import InputOutputError, InvalidConfigError, TgdrError

logger = logging.getLogger(__name__)


class TgdrGroup(click.Group):
    """Turns library failures into `error code=<CODE> message=<text>` and exit status 1."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except TgdrError as e:
            self._fail(ctx, e)
        except ValidationError as e:
            messages = "; ".join(
                f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
            )
            self._fail(ctx, InvalidConfigError(messages))
        except OSError as e:
            self._fail(ctx, InputOutputError(str(e)))

    @staticmethod
    def _fail(ctx: click.Context, error: TgdrError):
        logger.error(f"{type(error).__name__}: {error.message}")
        click.echo(error.one_line(), err=True)
        ctx.exit(1)


def create_cli() -> click.Group:
    @click.group(cls=TgdrGroup)
    @click.option(
        "--log-level",
        type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
        default=LOG_LEVEL.upper(),
        show_default=True,
    )
    @click.version_option(__version__, prog_name="multitgdr")
    def cli(log_level):
        """Sparse multi-class and multi-study classifiers by threshold gradient descent."""
        logging.basicConfig(
            level=getattr(logging, log_level.upper()),
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )

    # Include commands
    cli.add_command(simulate.command)
    cli.add_command(fit.command)
    cli.add_command(cv.command)
    cli.add_command(bag.command)
    cli.add_command(pool.command)
    cli.add_command(predict.command)
    cli.add_command(evaluate.command)
    cli.add_command(replicate.command)

    return cli


def main():
    create_cli()(prog_name="multitgdr")
