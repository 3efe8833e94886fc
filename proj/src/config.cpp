#include "epgd/config.hpp"

#include <stdexcept>
#include <string>

namespace epgd {

void DenoiseConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
    if (patch_size < 1) fail("patch size must be >= 1");
    if (group_size < 1) fail("group size must be >= 1");
    if (window < 1 || window % 2 == 0) fail("window must be odd and >= 1");
    if (mixture_size < 1) fail("mixture size must be >= 1");
    if (external_atoms < 0 || external_atoms > dim())
        fail("external atom count must lie in [0, 3p^2]");
    if (lambda < 0.0) fail("lambda must be >= 0");
    if (eps <= 0.0) fail("eps must be > 0");
    if (dict_iters < 0) fail("dictionary iterations must be >= 0");
    if (ite_num < 1) fail("outer iterations must be >= 1");
    if (stride < 1 || stride > patch_size) fail("stride must lie in [1, p]");
}

} // namespace epgd
