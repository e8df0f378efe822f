"""Reference command texts, one string each, kept in their original layout.

``MONEY_FLOW_PATH`` uses the parameter ``α``, so a session must SET alpha first.
"""

ALICE_TWO_HOP = """MATCH c1-[r1]->a1-[r2]->a2
WHERE c1.name = `Alice'"""

ALICE_OWNS_WIRES = """MATCH c1-[r1:O]->a1-[r2:W]->a2
WHERE c1.name = `Alice'"""

WIRE_TRIANGLE = """MATCH a1-[r1:W]->a2-[r2:W]->a3, a3-[r3:W]->a1
WHERE a1.ID=v1"""

ALICE_USD_WIRES = """ MATCH c1-[r1:O]->a1-[r2:W]->a2
 WHERE c1.name = `Alice', r2.currency=USD"""

RECONFIGURE_CURRENCY = """RECONFIGURE PRIMARY INDEXES
PARTITION BY e_adj.label, e_adj.currency
SORT BY v_nbr.city"""

TRANSFER_TREE = """MATCH a1-[:W]->a2-[:W]->a3, a1-[:W]->a4
      a1-[:DD]->a5-[:DD]->a6
WHERE a1.ID=v5, a3.city=a4.city=a6.city"""

LARGE_USD = """CREATE 1-HOP VIEW LargeUSDTrnx
MATCH v_s-[e_adj]->v_d
WHERE e_adj.currency=USD, e_adj.amt>10000
INDEX AS FW-BW
PARTITION BY e_adj.label  SORT BY v_nbr.ID"""

MONEY_FLOW_PATH = """MATCH a1-[r1:]->a2-[r2:]->a3-[r3:]->a4
WHERE r1.eID=t13,
r1.date<r2.date  & r2.amt<r1.amt<r2.amt+α  &
r2.date<r3.date & r3.amt<r2.amt<r3.amt+α"""

MONEY_FLOW = """CREATE 2-HOP VIEW MoneyFlow
MATCH v_s-[e_b]→v_d-[e_adj]→v_nbr
WHERE e_b.date<e_adj.date, e_adj.amt<e_b.amt
INDEX AS PARTITION BY e_adj.label SORT BY v_nbr.city"""

REDUNDANT = """CREATE 2-HOP VIEW Redundant
MATCH v_s-[e_b]→v_d-[e_adj]→v_nbr
WHERE e_adj.amt<10000"""

# runs cleanly, in this order, on the fixture with ownership edges
RUNNABLE = {
    "alice_two_hop": ALICE_TWO_HOP,
    "alice_owns_wires": ALICE_OWNS_WIRES,
    "wire_triangle": WIRE_TRIANGLE,
    "alice_usd_wires": ALICE_USD_WIRES,
    "reconfigure_currency": RECONFIGURE_CURRENCY,
    "transfer_tree": TRANSFER_TREE,
    "large_usd": LARGE_USD,
    "money_flow_path": MONEY_FLOW_PATH,
    "money_flow": MONEY_FLOW,
}

# the reconfiguration with its keyword misspelled
RECONFIGURE_TYPO = RECONFIGURE_CURRENCY.replace("PARTITION", "PARTITON")
