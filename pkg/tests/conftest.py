import pytest

from tracelab import textio
from tracelab.semantics import Store, run
from tracelab.values import TT


# The running example: a counting loop with a mod-3 fast path.
LOOP_SRC = """
#entry L0
L0: x := 0 -> L1
L1: (x <= 20) -> L2
L1: !(x <= 20) -> L5
L2: x := x + 1 -> L3
L3: ((x % 3) = 0) -> L4
L3: !((x % 3) = 0) -> L1
L4: x := x + 3 -> L1
L5: skip -> .
"""

# Sieve of Eratosthenes over a 100-slot boolean array.
SIEVE_SRC = """
#entry L0
#array primes 100
L0: i := 2 -> L1
L1: (i <= 99) -> L2
L1: !(i <= 99) -> L8
L2: (primes[i] = tt) -> L3
L2: !(primes[i] = tt) -> L7
L3: k := i + i -> L4
L4: (k <= 99) -> L5
L4: !(k <= 99) -> L7
L5: primes[k] := ff -> L6
L6: k := k + i -> L4
L7: i := i + 1 -> L1
L8: skip -> .
"""

# Constant-folding demo: a stays 2 on the fast branch.
CF_SRC = """
#entry L0
L0: x := 0 -> L1
L1: a := 2 -> L2
L2: (x <= 15) -> L3
L2: !(x <= 15) -> L7
L3: (x <= 5) -> L4
L3: !(x <= 5) -> L5
L4: x := x + a -> L2
L5: a := a + 1 -> L6
L6: x := x + a -> L2
L7: skip -> .
"""

# Dead-store demo: z := 0 is overwritten before every read; output after the loop.
DSE_SRC = """
#entry L1
L1: (x <= 0) -> L2
L1: !(x <= 0) -> L5
L2: z := 0 -> L3
L3: x := x + 1 -> L4
L4: z := 1 -> L1
L5: put {x, z} -> L6
L6: skip -> .
"""


@pytest.fixture(scope="session")
def loop_program():
    return textio.parse_program(LOOP_SRC)


@pytest.fixture(scope="session")
def loop_run(loop_program):
    return run(loop_program, Store(), 1000)


@pytest.fixture(scope="session")
def sieve_program():
    return textio.parse_program(SIEVE_SRC)


@pytest.fixture(scope="session")
def sieve_store():
    return Store({f"primes_{i}": TT for i in range(100)})


@pytest.fixture(scope="session")
def cf_program():
    return textio.parse_program(CF_SRC)


@pytest.fixture(scope="session")
def dse_program():
    return textio.parse_program(DSE_SRC)


def command_at(p, label, pred=lambda c: True):
    matches = [c for c in p.at(label) if pred(c)]
    assert len(matches) == 1, f"ambiguous command lookup at {label}: {matches}"
    return matches[0]
