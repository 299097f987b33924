"""Rule-based stand-ins for a translation system with known metric outcomes."""

from __future__ import annotations

from enum import Enum
from typing import Sequence

from .annotator import AnnotationConfig, strip_annotation


class OracleKind(str, Enum):
    COPY_ANNOTATION = "copy"
    ECHO_SOURCE = "echo"
    REFERENCE_LEAK = "refleak"


def oracle_translate(annotated_src: Sequence[str], ref: Sequence[str] | None, kind, cfg: AnnotationConfig | None = None) -> list[str]:
    """Pseudo-translate one sentence.

    ``copy`` replaces each annotated region with its suggested target lemmas
    and keeps every other source token, i.e. it copies suggestions but never
    inflects them. ``echo`` returns the stripped source. ``refleak`` returns
    the reference.
    """
    kind = OracleKind(kind)
    if kind is OracleKind.REFERENCE_LEAK:
        if ref is None:
            raise ValueError("refleak oracle needs the reference")
        return list(ref)
    tokens = list(annotated_src)
    plain, regions = strip_annotation(tokens, cfg)
    if kind is OracleKind.ECHO_SOURCE:
        return plain
    out, pos = [], 0
    for region in regions:
        start, length = region.src_span
        out.extend(plain[pos:start])
        out.extend(region.tgt_lemma)
        pos = start + length
    out.extend(plain[pos:])
    return out
