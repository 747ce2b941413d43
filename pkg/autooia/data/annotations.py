from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List

import numpy as np

from autooia.const import NUM_ACTIONS, NUM_EXPLANATIONS
from autooia.exceptions.exception import AnnotationParseError, DuplicateSceneError
from autooia.utils import mask_to_text


@dataclass(frozen=True)
class AnnotationRecord:
    scene_id: str
    action: np.ndarray
    explanation: np.ndarray

    def to_line(self) -> str:
        return f"{self.scene_id}\t{mask_to_text(self.action)}\t{mask_to_text(self.explanation)}"


def _parse_mask(text: str, arity: int, what: str, path, line_no: int) -> np.ndarray:
    if len(text) != arity:
        raise AnnotationParseError(path, line_no, f"{what} mask needs {arity} characters, got {len(text)}")
    if set(text) - {"0", "1"}:
        raise AnnotationParseError(path, line_no, f"{what} mask may only contain '0' and '1', got {text!r}")
    return np.array([int(ch) for ch in text], dtype=np.int8)


def parse_annotation_line(line: str, path="<string>", line_no: int = 1) -> AnnotationRecord:
    fields = line.rstrip("\r\n").split("\t")
    if len(fields) != 3:
        raise AnnotationParseError(path, line_no, f"expected 3 tab-separated fields, got {len(fields)}")
    scene_id, action_text, explanation_text = fields
    if not scene_id:
        raise AnnotationParseError(path, line_no, "empty scene id")
    return AnnotationRecord(
        scene_id=scene_id,
        action=_parse_mask(action_text, NUM_ACTIONS, "action", path, line_no),
        explanation=_parse_mask(explanation_text, NUM_EXPLANATIONS, "explanation", path, line_no),
    )


def load_annotations(path: Path) -> List[AnnotationRecord]:
    """
    Reads one annotation file: ``scene_id<TAB>action mask<TAB>explanation mask`` per line.
    Blank lines are ignored.

    Raises:
        AnnotationParseError: Naming the offending line, for bad arity, bad characters
            or a repeated scene id.
    """
    path = Path(path)
    records: List[AnnotationRecord] = []
    seen = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            record = parse_annotation_line(line, path, line_no)
            if record.scene_id in seen:
                raise DuplicateSceneError(path, line_no,
                                          f"duplicate scene id '{record.scene_id}' (first on line {seen[record.scene_id]})")
            seen[record.scene_id] = line_no
            records.append(record)
    return records


def write_annotations(path: Path, records: Iterable[AnnotationRecord]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(record.to_line() + "\n")
