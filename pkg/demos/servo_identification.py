"""Position profiles of a servo axis: generation and a single identified model."""

# %%
import numpy as np

from opident import IdentifiedModel, NetworkConfig
from opident.data import assemble_servo_dataset, fit_normalization, normalize
from opident.servo import generate_servo_corpus
from opident.training import LmParams, train_levenberg_marquardt

# %% [markdown]
# Trapezoidal velocity profiles to 1.5e6 ppu. At 5e6 ppu/s^2 the ramps are
# short and the position curve is nearly a straight ramp; at 1e6 ppu/s^2 the
# long ramps give the S shape.

# %%
corpus = generate_servo_corpus()
for s in corpus[::4]:
    p = s.profile
    ramp, cruise = p.phase_fractions()
    print(f"a {p.acceleration:.0e}  v {p.peak_velocity:.2e}  stops at {p.stop_time:.3f} s  "
          f"ramping {100 * ramp:4.1f}%  cruising {100 * cruise:4.1f}%")

# %% [markdown]
# 250 samples per series keep the Jacobian small.

# %%
ds = assemble_servo_dataset(corpus, stride=20)
spec = fit_normalization(ds)
nds = normalize(ds, spec)
result = train_levenberg_marquardt(NetworkConfig(3, [(15, "tansig")]), nds, LmParams(max_epochs=100), seed=1)
print(f"{len(ds)} rows, {result.epochs_run} epochs, normalized RMSE {result.final_rmse:.2e}")

# %%
model = IdentifiedModel(result.network, spec, "servo")
s = corpus[11]  # low acceleration
idx = np.arange(0, 5000, 500)
rows = np.column_stack([s.t[idx], np.full(idx.size, s.profile.acceleration), s.velocity[idx]])
for t, true, pred in zip(s.t[idx], s.position[idx], model.predict(rows)):
    print(f"t {t:4.2f} s  position {true:10.0f}  model {pred:10.0f} ppu")
