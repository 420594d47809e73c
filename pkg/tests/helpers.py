"""Shared fixtures-by-function for the test modules, cached per session."""

import functools

from gridmodal.cases import bundled_path
from gridmodal.dynamics.assembly import assemble
from gridmodal.power_flow import solve_power_flow
from gridmodal.system_model import parse_case, parse_case_text

BUNDLED = ("smib", "three_machine", "krps35")

#: acceptance lines collected for the terminal summary
ACCEPTANCE = []


def report(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


@functools.lru_cache(maxsize=None)
def case(name, pss=True):
    c = parse_case(bundled_path(name))
    return c if pss else c.without_pss()


@functools.lru_cache(maxsize=None)
def power_flow(name, pss=True):
    return solve_power_flow(case(name, pss))


@functools.lru_cache(maxsize=None)
def system(name, pss=True):
    return assemble(case(name, pss), power_flow(name, pss))


def build(text, name="test"):
    """Parse, solve and assemble a case given as text."""
    c = parse_case_text(text, name)
    return assemble(c, solve_power_flow(c))


MACHINE = ("h=3.2 d=0 xd=1.05 xd_p=0.33 xd_pp=0.24 xq=0.68 xq_p=0.45 xq_pp=0.26 "
           "xls=0.16 rs=0.003 tdo_p=6.5 tdo_pp=0.045 tqo_p=0.9 tqo_pp=0.07")

SMALL_CASES = {
    "two_bus_load": """
SYSTEM s_base=100 f=50
BUS id=1 kind=slack kv=132 vset=1.02
BUS id=2 kind=pq kv=132
BRANCH from=1 to=2 r=0.01 x=0.08 b=0.02 len=20
LOAD bus=2 p0=80 q0=30 a=0 b=0
""",
    "three_bus_pv": """
SYSTEM s_base=100 f=50
BUS id=1 kind=slack kv=132 vset=1.04 angle=0
BUS id=2 kind=pv kv=132 vset=1.02
BUS id=3 kind=pq kv=132
BRANCH from=1 to=2 r=0.02 x=0.10 b=0.03 len=18
BRANCH from=2 to=3 r=0.015 x=0.09 b=0.02 len=12
BRANCH from=1 to=3 r=0.03 x=0.16 b=0.05 len=40
LOAD bus=3 p0=150 q0=60 a=1 b=2
LOAD bus=2 p0=20 q0=5
UNIT bus=2 pset=90 mva=120 machine{%s}
""" % MACHINE,
    "five_bus_mesh": """
SYSTEM s_base=100 f=50
BUS id=1 kind=slack kv=132 vset=1.05
BUS id=2 kind=pv kv=132 vset=1.03
BUS id=3 kind=pq kv=132
BUS id=4 kind=pq kv=132
BUS id=5 kind=pv kv=132 vset=1.01
BRANCH from=1 to=2 r=0.008 x=0.06 b=0.04 len=35
BRANCH from=1 to=3 r=0.02 x=0.12 b=0.02 len=24
BRANCH from=2 to=3 r=0.015 x=0.09 b=0.03 len=60
BRANCH from=3 to=4 r=0.01 x=0.07 b=0.01 len=10
BRANCH from=4 to=5 r=0.012 x=0.08 b=0.02 len=26
BRANCH from=2 to=5 r=0.025 x=0.14 b=0.05 len=80
LOAD bus=3 p0=120 q0=40 a=2 b=2
LOAD bus=4 p0=90 q0=35 a=0.5 b=1.5
LOAD bus=5 p0=30 q0=10
UNIT bus=2 pset=70 mva=100 machine{%s}
UNIT bus=5 pset=60 mva=80 machine{%s} governor{gas}
""" % (MACHINE, MACHINE),
}
