from typing import Literal, NamedTuple

PRE_RELEASE_TAGS = {"alpha": "a", "beta": "b", "candidate": "rc"}


class VersionInfo(NamedTuple):
    """
    Release number of the tool. ``str()`` gives the display form, for example ``0.3.0-b1``;
    the part before the dash is the package version.
    """
    major: int
    minor: int
    patch: int
    release_level: Literal["alpha", "beta", "candidate", "final"]
    serial: int

    @property
    def release(self) -> str:
        return ".".join(map(str, self[:3]))

    @property
    def pre_release(self) -> str:
        tag = PRE_RELEASE_TAGS.get(self.release_level)
        return f"{tag}{self.serial}" if tag and self.serial else ""

    def __str__(self) -> str:
        return f"{self.release}-{self.pre_release}" if self.pre_release else self.release


version = VersionInfo(0, 3, 0, 'beta', 1)

TITLE = 'AUTO OIA'
DESCRIPTION = ('Object-induced action and explanation prediction on frozen detector features, '
               'with a training, evaluation and ablation harness.')
AUTHOR = 'vnpnh'
VERSION_TEXT = str(version)
LICENSE = 'MIT License'
