from pathlib import Path

import pytest

from microdroid.parser import parse_program
from microdroid.wellformed import ensure_well_formed

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"


def load(text: str):
    return ensure_well_formed(parse_program(text))


# Library classes shared by the small test programs: one source, one sink.
LIB = """
 (class Telephony (super Object)
   (method getDeviceId (static) (args) (returns int) (locals 0)
     (0 (move (reg ret) (prim int 7)))
     (1 (return))))
 (class Sink (super Object)
   (method leak (static) (args int) (returns void) (locals 0)
     (0 (return))))
"""


def activity_program(body: str, locals_: int = 2, extra: str = "", callbacks="(onCreate onCreate)"):
    """A one-activity program whose onCreate has the given numbered body."""
    return load(f"""(program (entry Main) {LIB} {extra}
 (class Main (super Activity)
   (activity (callbacks {callbacks}))
   (method onCreate (args) (returns void) (locals {locals_})
     {body})))""")


@pytest.fixture
def corpus_dir():
    return CORPUS
