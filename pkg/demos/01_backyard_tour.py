# %% [markdown]
# # A tour of the two-level dictionary
#
# Most keys sit in fixed-size bins.  The few that find their bin full go to a
# small cuckoo table, and move back to their bin as soon as it has room.

# %%
import numpy as np

from backyard import BackyardDict, derive_params

p = derive_params(1 << 16, eps=0.25)
print(p.d, p.m, p.ell, p.core_words, p.word_bound)

# %%
d = BackyardDict(1 << 16, eps=0.25, seed=7)
keys = np.random.default_rng(7).choice(1 << 32, size=1 << 16, replace=False).tolist()
for x in keys:
    d.insert(x)

print(len(d), d.second_level_size())  # only a sliver lives in the cuckoo level
print(d.stats()["cuckoo"]["queue_high"], d.stats()["max_op_steps"], d.step_budget)

# %%
# deletions free bin cells; later cuckoo walks hand residents back to their bins
for x in keys[:2000]:
    d.delete(x)
for x in keys[:2000]:
    d.insert(x)
print(d.second_level_size(), d.cuckoo.hook_placements)

# %%
where = [d.location(x) for x in keys[:5000]]
print({loc: where.count(loc) for loc in set(where)})

# %%
print(d.space_words())
