#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "amgs/contact.hpp"
#include "amgs/lcp.hpp"

namespace amgs::io {

// Dense LCP directory: A.mtx (array), q.mtx, optional l.mtx / u.mtx.
void save_lcp(const std::filesystem::path& dir, const LcpProblem& prob,
              const std::optional<Bounds>& bounds = std::nullopt);

struct LoadedLcp {
  LcpProblem problem;
  std::optional<Bounds> bounds;
};
LoadedLcp load_lcp(const std::filesystem::path& dir);

// Contact problem directory: J.mtx (coordinate), minv.mtx (array, the 3x3
// blocks stacked body-major into a (3 bodies) x 3 matrix), v.mtx, b.mtx,
// optional l.mtx / u.mtx.
void save_contact(const std::filesystem::path& dir, const ContactLcp& prob,
                  const std::optional<Bounds>& bounds = std::nullopt);

struct LoadedContact {
  ContactLcp problem;
  std::optional<Bounds> bounds;
};
LoadedContact load_contact(const std::filesystem::path& dir);

/// True when `dir` holds a contact problem rather than a dense LCP.
bool is_contact_dir(const std::filesystem::path& dir);

/// `iter,residual` CSV; iteration 0 is the residual before the first sweep
/// when `initial` is given.
void save_residual_history(const std::filesystem::path& path,
                           const std::vector<double>& history,
                           std::optional<double> initial = std::nullopt);
std::string format_residual_history(const std::vector<double>& history,
                                    std::optional<double> initial = std::nullopt);

}  // namespace amgs::io
