"""Regeneration blocks, the speed, and the CLT variance over many environments."""
from rwre import GeneratorSet, clt_check, dirichlet_law, run_ensemble

gs = GeneratorSet(2, 0)
law = dirichlet_law([1.0] * 4, 0.05)

ens = run_ensemble(law, gs, master_seed=99, n_traj=400, n_steps=10_000, mode="strict", delta=200)
sp = ens.speed()
print(f"blocks: {sp.n_blocks}, v_hat = {sp.v_hat:.4f} +- {sp.ci95:.4f}")
ep = ens.speed_endpoint()
print(f"endpoint check: {ep.v_hat:.4f} +- {ep.ci95:.4f}")

clt = ens.sigma2(sp.v_hat)
print(f"sigma2_hat = {clt.sigma2_hat:.4f} +- {clt.sigma2_se:.4f}, E[tau] = {clt.Etau_hat:.2f}")

ks, _, _, _ = clt_check(ens)
print(f"KS distance {ks.distance:.4f} vs threshold {ks.threshold:.4f}: {'pass' if ks.passed else 'fail'}")

blocks = ens.blocks
print("block types seen:", {gs.label(t): int((blocks.type == t).sum()) for t in range(gs.d)})
