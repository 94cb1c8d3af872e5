// SPDX-License-Identifier: Apache-2.0
//
// On-disk formats: the JSON graph document, the JSON weight document, the
// JSON edge-flip replay list, and the CSV report emitters. All numeric CSV
// output is printed with round-trip precision so re-runs are byte-identical.

#pragma once

#include <string>

#include "wtawp/analysis.hpp"
#include "wtawp/attacks.hpp"
#include "wtawp/awp.hpp"
#include "wtawp/graph.hpp"
#include "wtawp/model.hpp"

namespace wtawp {

/// "%.17g" rendering; doubles survive a parse round-trip bit-exactly.
std::string format_double(double v);

// {n_nodes, edges: [[i,j],...], features: [[...]], labels: [...]}
std::string graph_to_json(const Graph& g);
Graph graph_from_json(const std::string& text);

// {layers: [{rows, cols, data: [...]}], awp_mask: [...]}
std::string params_to_json(const ModelParams& p);
ModelParams params_from_json(const std::string& text);

// {added: [[i,j],...], removed: [[i,j],...]} for attack replay
std::string edge_flips_to_json(const PerturbedGraph& p);

/// One row per epoch: epoch,train_loss,awp_loss,rel_grad_norm,val_acc
std::string train_report_to_csv(const TrainReport& r);

/// alpha,mean_loss,dir_0,...,dir_{n-1}
std::string landscape_to_csv(const LandscapeSlice& s);

std::string bound_report_to_csv(const BoundReport& r, double m, double confidence_delta,
                                double rho);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace wtawp
