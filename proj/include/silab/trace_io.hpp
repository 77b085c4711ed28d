#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "silab/dynamics.hpp"
#include "silab/jump.hpp"
#include "silab/net.hpp"

namespace silab::io {

/// Shortest decimal form that round-trips the exact double (to_chars).
std::string format_double(double v);
double parse_double(const std::string& s);

/// CSV with the fixed header
/// step,loss,rho,grad_norm,eff_grad_norm,eff_lr,cos_dist,train_error
std::string trace_to_csv(const dynamics::Trajectory& traj);
void write_trace_csv(const std::filesystem::path& path, const dynamics::Trajectory& traj);

/// Reads records back; config/objective fields of the result are left
/// default except eta/lambda when provided.
dynamics::Trajectory read_trace_csv(const std::filesystem::path& path, double eta = 0.0,
                                    double lambda = 0.0);

/// Overlay CSV: step,cos_dist,delta_min,delta_max
std::string overlay_to_csv(const jump::DeltaEnvelopes& env);

/// Similarity CSV: step,cosine_sim,ensemble_err,single_err
std::string similarity_to_csv(const std::vector<net::SimilarityRow>& rows);

/// Textual vector dump: "step <t>", "dim <n>", optional "netspec <hash>",
/// then one coordinate per line.
void write_checkpoint(const std::filesystem::path& path, const dynamics::Checkpoint& ck,
                      const std::string& netspec_hash = {});
dynamics::Checkpoint read_checkpoint(const std::filesystem::path& path,
                                     std::string* netspec_hash = nullptr);

/// SHA-1 of the git blob preimage ("blob <len>\0" + bytes), hex digest.
std::string git_blob_sha1(const std::string& bytes);

void write_file(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

} // namespace silab::io
