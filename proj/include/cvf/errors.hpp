#ifndef CVF_ERRORS_HPP
#define CVF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cvf {

/// Failure classes surfaced by the toolkit. Each maps to a distinct CLI
/// exit code (see tools/cvf.cpp).
enum class errc {
    invalid_field,
    invalid_parameter,
    invalid_region,
    region_too_tight,
    grid_too_coarse,
    kernel_too_wide,
    spec_mismatch,
    not_compatible,
    solver_failure,
    not_conservative_input,
    target_unreachable,
    no_contraction,
    degenerate_map,
    not_diffeo,
    no_twist,
    twist_lost,
    newton_failure,
    format_error,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::invalid_field: return "InvalidField";
        case errc::invalid_parameter: return "InvalidParameter";
        case errc::invalid_region: return "InvalidRegion";
        case errc::region_too_tight: return "RegionTooTight";
        case errc::grid_too_coarse: return "GridTooCoarse";
        case errc::kernel_too_wide: return "KernelTooWide";
        case errc::spec_mismatch: return "SpecMismatch";
        case errc::not_compatible: return "NotCompatible";
        case errc::solver_failure: return "SolverFailure";
        case errc::not_conservative_input: return "NotConservativeInput";
        case errc::target_unreachable: return "TargetUnreachable";
        case errc::no_contraction: return "NoContraction";
        case errc::degenerate_map: return "DegenerateMap";
        case errc::not_diffeo: return "NotDiffeo";
        case errc::no_twist: return "NoTwist";
        case errc::twist_lost: return "TwistLost";
        case errc::newton_failure: return "NewtonFailure";
        case errc::format_error: return "FormatError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
  public:
    Error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const { return code_; }

  private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, errc code, const std::string& what) {
    if (!cond) fail(code, what);
}

}  // namespace cvf

#endif
