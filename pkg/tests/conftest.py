import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from confkws import corpus

TINY_DICT = """\
;;; tiny CMU-convention dictionary for tests
BLUE  B L UW1
GLUE  G L UW1
GOAT  G OW1 T
READ  R IY1 D
READ(2)  R EH1 D
NINE  N AY1 N
RIGHT  R AY1 T
FIVE  F AY1 V
HM  HH M
FORWARD  F AO1 R W ER0 D
ABOUT  AH0 B AW1 T
MOON  M UW1 N
TOOTH  T UW1 TH
CHEW  CH UW1
STOP  S T AA1 P
MARVIN  M AA1 R V AH0 N
ON  AA1 N
"""


@pytest.fixture
def tiny_dict_path(tmp_path):
    p = tmp_path / "tiny_dict.txt"
    p.write_text(TINY_DICT, encoding="utf-8")
    return p


def make_manifest(keywords, per_keyword, source="real", duration=1.0, prefix="u"):
    """Simple in-memory manifest: per_keyword records per keyword."""
    records = []
    for kw in keywords:
        for i in range(per_keyword):
            records.append(
                corpus.UtteranceRecord(
                    id=f"{prefix}_{kw}_{i:03d}",
                    keyword=kw,
                    speaker=f"spk{i % 7}",
                    source=source,
                    duration_s=duration,
                )
            )
    return corpus.Manifest(records)


@pytest.fixture
def small_manifest():
    return make_manifest(["blue", "glue", "goat", "nine"], per_keyword=12)
