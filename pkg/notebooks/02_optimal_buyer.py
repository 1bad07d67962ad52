# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # The optimal single buyer
#
# Backward induction over the decision tree of reinforced PRRFES gives the
# exact surplus-maximizing play for short horizons.  Its rejections should
# all fall in the region where rejecting can pay off:
# `v - p < zeta * (p - last accepted price)`.

# %%
from divauction import dp_optimal, from_decimal, prrfes_init, r_gamma, zeta
from divauction.pricing_tree import price_sequence
from divauction.prrfes import EXPLORE

gamma, T = 0.5, 12
r = r_gamma(gamma)
v = from_decimal("0.6")
policy = dp_optimal(prrfes_init(r), v, gamma, T)
path = policy.optimal_path()
prices = price_sequence(prrfes_init(r), path)
print("value", float(policy.value))
for t, (p, a) in enumerate(zip(prices, path), 1):
    print(t, p, "accept" if a else "reject")

# %% [markdown]
# Check every node the solver visited, not just the optimal path.

# %%
z = zeta(r, gamma)
worst = None
for t, state, accept, _ in policy.nodes():
    p = state.price()
    if state.mode == EXPLORE and not accept and p <= v:
        margin = z * float(p - state.last_accepted()) - float(v - p)
        worst = margin if worst is None else min(worst, margin)
print("smallest slack of an optimal rejection:", worst)

# %% [markdown]
# The same check over a grid of valuations and discounts is the `prop1`
# suite of `divauction verify`.

# %%
from divauction.verify import prop1_checks

for c in prop1_checks(gammas=(0.3, 0.5, 0.7), horizons=(8, 12), grid_bits=4):
    print(c.line())
