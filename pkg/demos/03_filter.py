# %% [markdown]
# # A filter from an exact dictionary
#
# Hash keys into ceil(n / delta) values and store the hashed set exactly.
# Members always answer "maybe"; a non-member collides with probability at
# most delta.

# %%
import numpy as np

from backyard import MembershipFilter

n, delta = 10_000, 0.01
f = MembershipFilter(n, delta, seed=3)
gen = np.random.default_rng(3)
members = gen.choice(1 << 31, size=n, replace=False)
for x in members.tolist():
    f.insert(x)

print(f.R, f.inserted)
print(f.query_many(members).all())

# %%
probes = gen.integers(1 << 31, 1 << 32, size=200_000, dtype=np.uint64)
print(f.query_many(probes).mean(), delta)

# %%
b = f.bits()
print(b["bits_per_element"], np.log2(1 / delta), b["bits_total"], b["envelope"])
