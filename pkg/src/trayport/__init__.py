"""trayport: control plane and digital twin for automated crop-tray transport.

Subpackages:
  farm       static farm geometry and kinematic parameters
  protocol   wire messages between the control server and devices
  server     device registry, update staging, readings, script coordinator
  agents     simulated mover/elevator firmware and the module world
  sim        deterministic discrete-event simulator
  analytics  closed-form throughput and labour-cost calculators
"""

__version__ = "0.1.0"
