"""Binary intrinsic dimension estimation for large bit datasets."""
import warnings

# numba probes for a newer TBB than some systems ship; the fallback layer is fine.
warnings.filterwarnings("ignore", message="The TBB threading layer requires TBB")

__version__ = "0.1.0"
