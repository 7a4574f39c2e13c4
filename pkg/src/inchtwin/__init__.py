"""Digital twin of an untethered magnetic inchworm soft robot.

Subsystems: coil/magnet force models (`magnetics`), the discretized soft
body (`body`), ground/water environments (`environment`), the onboard gait
controller emulation (`firmware`), the coupled time stepper (`engine`),
the teleop wire protocol and server (`protocol`, `server`), and the
scenario/calibration front end (`harness`, `calibrate`, `cli`).
"""

__version__ = "0.1.0"
