# Homogeneous runs: the modified leapfrog energy is conserved to roundoff,
# and a dt scan up to exp(-0.01) h shows where LF-LTS(0) breaks down while
# LF-LTS(0.01) stays stable.
import numpy as np

from lflts.femspace import assemble
from lflts.integrators import IntegratorConfig, random_smooth_data, run, stabilityScan
from lflts.mesh import RegionSpec, buildLocallyRefined

h, p = 0.05, 5
mesh = buildLocallyRefined(RegionSpec((0.0, 1.0), h, (0.4, 0.6), p))
space = assemble(mesh, 1, "dirichlet")
u0 = random_smooth_data(space)
zero = lambda x: 0 * x

for nu in (0.0, 0.01):
    cfg = IntegratorConfig.from_mesh(h, p, nu)
    res = run(space, None, cfg, u0, zero, None, 10_000 * cfg.dt, record_energy=True)
    E = res.energies
    print(f"nu={nu}: relative energy drift {np.abs(E - E[0]).max() / E[0]:.1e}")

dts = h * np.exp(-0.01) * np.linspace(0.05, 1.0, 20)
rows = stabilityScan(space, dts, 20.0, p, nus=(0.0, 0.01))
print("dt/h    nu=0     nu=0.01")
for r in rows:
    tag = lambda v: "stable" if v is None else f"blow@{v}"
    print(f"{r['dt'] / h:.2f}   {tag(r[0.0]):8s} {tag(r[0.01])}")
