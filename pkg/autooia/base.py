import logging
import sys
from dataclasses import dataclass, field
from typing import Optional

from rich.console import Console

from autooia.settings import Settings

logger = logging.getLogger(__name__)


@dataclass
class Base:
    """
    Base class providing the settings and console shared by the CLI and the experiment runners.

    Attributes:
        settings (Settings): Runtime settings object.
        system (str): Operating system detected at runtime.
        console (Console): Console used for user-facing messages.
    """
    settings: Optional[Settings] = field(default_factory=Settings)
    system: str = field(init=False)
    console: Console = field(init=False, repr=False)

    def __post_init__(self):
        self.system = self.detect_operating_system()
        self.console = Console(color_system=self.settings.color_system)

    def detect_operating_system(self) -> str:
        """
        Detects the operating system and picks the matching console color system.

        Returns:
            str: The platform prefix reported by sys.platform.
        """
        platform = sys.platform
        if platform.startswith("win"):
            self.settings.color_system = "windows"
        return platform

    def workers(self, jobs: int) -> int:
        """
        Number of workers for a fan-out of ``jobs`` independent tasks, capped by settings.threads.
        """
        count = max(1, min(self.settings.threads, jobs))
        logger.debug("Using %d worker(s) for %d job(s)", count, jobs)
        return count

    def say(self, message: str, status: str = "info") -> None:
        self.console.print(message, style=self.settings.style.get(status))
