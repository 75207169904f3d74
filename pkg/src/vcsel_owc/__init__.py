"""Downlink simulation for VCSEL-array optical wireless access points.

Modules
-------
geometry    array layout, user orientation and random-waypoint mobility
channel     Gaussian downlink, omnidirectional uplink, retroreflector return
link        APD noise, SNR/SINR and DCO-OFDM rate
eyesafety   exposure limits and the largest safe transmit power
analysis    closed-form SNR statistics and rate bounds for the central beam
activation  beam selection (strongest signal, retroreflector, classifier)
runner      experiment drivers and the ``vcsel-owc`` command
"""
__version__ = "0.1.0"
