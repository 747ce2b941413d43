import sys
from typing import NoReturn, Optional, Sequence

from rich.console import Console

from autooia.cli import OIACLI
from autooia.const import ExitCode
from autooia.exceptions.exception import (
    CheckpointError, ConfigError, DataError, DimensionError, LabelError, NumericAbortError, OIAError,
    ReportFormatError, UnknownGridError,
)

EXIT_CODES = (
    ((ConfigError, UnknownGridError), ExitCode.USAGE),
    ((DataError, CheckpointError, DimensionError, ReportFormatError, LabelError), ExitCode.DATA),
    ((NumericAbortError,), ExitCode.NUMERIC),
)


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, KeyboardInterrupt):
        return ExitCode.INTERRUPTED
    for kinds, code in EXIT_CODES:
        if isinstance(error, kinds):
            return code
    return ExitCode.ERROR


def handle_error(error: BaseException) -> NoReturn:
    console = Console(stderr=True)
    if isinstance(error, KeyboardInterrupt):
        console.print("OIA operation terminated by user", style="bold yellow")
    elif isinstance(error, NumericAbortError):
        console.print(f"Numeric abort: {error}", style="bold red")
    elif isinstance(error, OIAError):
        console.print(f"OIA Error: {error}", style="bold red")
    else:
        console.print(f"An unexpected error occurred: {error}", style="bold red")
    sys.exit(exit_code_for(error))


def main(argv: Optional[Sequence[str]] = None) -> None:
    try:
        OIACLI(argv=list(argv) if argv is not None else None).run()
    except (Exception, KeyboardInterrupt) as e:
        handle_error(e)


if __name__ == "__main__":
    main()
