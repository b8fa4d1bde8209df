# %% [markdown]
# # Storing quotients instead of keys
#
# A permutation turns a key into (bin, quotient).  The bin is implied by
# where the entry sits, so only the quotient is stored.  Here the audited bit
# count is compared with the information-theoretic minimum.

# %%
from backyard import SuccinctDict
from backyard.combinatorics import info_bound
from backyard.experiments import bits_audit

print(info_bound(16, 4), info_bound(8, 2))

# %%
for lg in (16, 20, 24):
    row = bits_audit(1 << lg, 1 << (lg // 2), eps=0.25, seed=0)
    print(f"u=2^{lg}  B={row['info_bound']}  used={row['bits_total']}  ratio={row['ratio']:.2f}  "
          f"target={row['target']:.0f}")

# %%
# the same dictionary with an explicit random permutation and several outer bins
sd = SuccinctDict(1 << 16, 1 << 10, gamma=0.5, perm_mode="table", seed=1)
for x in range(0, 1 << 16, 64):
    sd.insert(x)
b, q = sd.pi0.chop(sd.split(4096)[1])
print(sd.params.m_outer, sd.params.d_outer, (b, q), 4096 in sd, 4097 in sd)

# %%
a = sd.bits_used()
print(a.bits_first_level, a.bits_second_level, a.bits_hash_descriptors, a.bits_random_tables)
