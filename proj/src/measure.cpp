#include "isleforge/measure.hpp"

#include <sstream>
#include <stdexcept>

namespace isleforge {

std::string TestFunction::invalid_reason() const {
    std::ostringstream os;
    if (!(a > 0.0)) os << "a must be > 0";
    else if (!(a < a_top)) os << "a must be < a'";
    else if (!(a_top <= b_top)) os << "a' must be <= b'";
    else if (!(b_top < b)) os << "b' must be < b";
    else if (!(h >= 0.0)) os << "h must be >= 0";
    return os.str();
}

void TestFunction::validate() const {
    const auto why = invalid_reason();
    if (!why.empty()) throw std::invalid_argument("invalid trapezoid: " + why);
}

std::vector<double> flatten_prefix(const PrefixNode& root, std::size_t depth, std::size_t width) {
    std::vector<double> out;
    std::vector<const PrefixNode*> level{&root};
    for (std::size_t d = 0; d < depth; ++d) {
        std::vector<const PrefixNode*> next;
        for (const PrefixNode* p : level) {
            for (std::size_t j = 0; j < width; ++j) {
                const PrefixNode* c = (p && j < p->children.size()) ? &p->children[j] : nullptr;
                out.push_back(c ? c->population : 0.0);
                out.push_back(c ? c->fertility : 0.0);
                next.push_back(c);
            }
        }
        level = std::move(next);
    }
    return out;
}

} // namespace isleforge
