"""Solve heterodimensional cycles along an accumulation schedule and verify
both connections of each cycle.

Run:  python demos/04_heterodimensional_cycles.py   (about a minute)
"""

import json

from hetdim import (certificate_to_json, replay_certificate_dict,
                    solve_hetdim_general, solve_hetdim_symmetric,
                    verify_transverse_connection)
from hetdim.presets import hetdim_coeffs, hetdim_model, hetdim_schedule

model = hetdim_model()
coeffs = hetdim_coeffs()
theta_star = model.multipliers.theta
ratio = 2 * coeffs.y_minus / (coeffs.c * coeffs.x_plus)

print(f"theta* = {theta_star:.6f}; target lambda^k gamma^m = 2 y- / (c x+) = {ratio}")
print()

certs = []
for (k, m) in hetdim_schedule():
    cert = solve_hetdim_symmetric(model, coeffs, k, m, s_target=0.0)
    certs.append(cert)
    td = cert.theta_decomposition
    n_out = sum(1 for e in cert.index_evidence if abs(e) > 1)
    print(f"(k, m) = ({k}, {m}):")
    print(f"  mu = {cert.parameters['mu']:+.6e}, theta = {cert.parameters['theta']:.6f}")
    print(f"  closure residual = {cert.residuals['closure']:.2e}, "
          f"quasi-connection gap = {cert.residuals['gap']:.2e}")
    print(f"  lambda^k gamma^m = {td['lambda_k_gamma_m']:.6f}, "
          f"C* = {td['C_star']:.6f}, multipliers outside unit circle: {n_out}")
    tw = verify_transverse_connection(model, coeffs, cert)
    line = (f"  transverse connection found after {tw['iterations_used']} returns, "
            f"crossing slope {tw['crossing_slope']:.2e}")
    if tw["area_factors"]:
        line += (f", area factor {tw['area_factors'][0]:.2f} "
                 f"(predicted {tw['predicted_first_factor']:.2f})")
    print(line)
    print()

print("the sequence (mu_j, theta_j) accumulates on (0, theta*):")
for cert in certs:
    print(f"  mu = {cert.parameters['mu']:+.3e}, "
          f"theta* - theta = {theta_star - cert.parameters['theta']:+.5f}")

print("\n== general (non-symmetric) solver with a conjugate coefficient pair ==")
cert_g = solve_hetdim_general(model, coeffs, coeffs, 12, 10, s_target=0.0)
print(f"mu1 = {cert_g.parameters['mu1']:+.6e}, mu2 = {cert_g.parameters['mu2']:+.6e} "
      f"(difference {abs(cert_g.parameters['mu1'] - cert_g.parameters['mu2']):.1e})")

print("\n== certificate replay ==")
doc = json.loads(certificate_to_json(certs[0]))
checks = replay_certificate_dict(doc)
for name, val in checks.items():
    if isinstance(val, dict):
        print(f"  {name}: {'PASS' if val['ok'] else 'FAIL'} (value {val['value']})")
