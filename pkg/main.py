from multitgdr.cli import create_cli
import logging

logger = logging.getLogger(__name__)

cli = create_cli()

if __name__ == "__main__":
    cli(prog_name="multitgdr")
