from typing import Any, Dict, List

# Each preset is a partial RunConfig document layered under the config file.


class FigurePresets:
    @staticmethod
    def decoupled() -> Dict[str, Any]:
        """Uncoupled unit oscillators; the ground state is a product state with E = N/2."""
        return {
            "model": {"n_sites": 4, "gamma": 0.0, "gamma3": 0.0},
            "basis": {"order": 8},
            "ansatz": {"chi": 4},
        }

    @staticmethod
    def fig2() -> Dict[str, Any]:
        """Energy error versus expansion order, one table per chain length."""
        return {
            "model": {"n_sites": 8, "gamma": -0.5, "gamma3": 0.0},
            "ansatz": {"chi": 16},
            "scan": {"parameter": "D", "values": [4, 8, 12, 16], "n_sites": [4, 8, 12, 16]},
        }

    @staticmethod
    def fig3() -> Dict[str, Any]:
        """Energy error and middle-cut entropy versus bond dimension."""
        return {
            "model": {"n_sites": 16, "gamma": -0.5, "gamma3": 0.0},
            "basis": {"order": 8},
            "ansatz": {"chi": 16},
            "scan": {"parameter": "chi", "values": [2, 4, 8, 12, 16, 20]},
        }

    @staticmethod
    def fig4() -> Dict[str, Any]:
        """Two-body coupling sweep across gamma_c = 1/2 sec(pi/17) ~ 0.509.

        The residual stays small below gamma_c and becomes large above it.
        """
        return {
            "model": {"n_sites": 16, "gamma3": 0.0},
            "basis": {"order": 16},
            "ansatz": {"chi": 16},
            "scan": {"parameter": "gamma", "values": [0.1, 0.2, 0.3, 0.4, 0.45, 0.5, 0.52, 0.55, 0.6]},
        }

    @staticmethod
    def fig5() -> Dict[str, Any]:
        """Three-body coupling sweep at gamma = -0.2; the residual jumps near 0.168."""
        return {
            "model": {"n_sites": 16, "gamma": -0.2},
            "basis": {"order": 8},
            "ansatz": {"chi": 16},
            "scan": {"parameter": "gamma3", "values": [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3]},
        }

    @classmethod
    def names(cls) -> List[str]:
        return ["decoupled", "fig2", "fig3", "fig4", "fig5"]

    @classmethod
    def get(cls, name: str) -> Dict[str, Any]:
        if name not in cls.names():
            raise KeyError(name)
        return getattr(cls, name)()
