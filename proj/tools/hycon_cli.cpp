// hycon: command-line front end.
//
// Exit codes: 0 success, 1 validation failure, 2 configuration error,
// 3 I/O error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hycon/hycon.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hycon;

namespace {

struct Globals {
  double kappa = 1.0;
  double boundary_const = kDefaultBoundaryConst;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::vector<std::string> argv;
};

std::uint64_t resolve_seed(const Globals& g, std::uint64_t fallback) {
  if (g.seed) return *g.seed;
  if (const char* env = std::getenv("HYCON_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("HYCON_SEED is not an unsigned integer: ") + env);
    }
  }
  return fallback;
}

// Writes `<out>.config.json` with argv, parameters and their digest. Thread
// count is recorded but kept out of the digest.
std::string write_config(const Globals& g, const fs::path& out, json params) {
  params["kappa"] = g.kappa;
  params["boundary_const"] = g.boundary_const;
  const std::string digest = hex_digest(fnv1a64(params.dump()));
  json doc{{"argv", g.argv}, {"threads", g.threads}, {"params", params}, {"digest", digest}};
  io_detail::write_file(fs::path(out.string() + ".config.json"), doc.dump(2) + "\n");
  return digest;
}

fs::path with_extension(const fs::path& p, const std::string& ext) {
  fs::path q = p;
  q.replace_extension(ext);
  return q;
}

TagSet parse_tags(const std::vector<std::string>& raw) { return make_tags(raw); }

EmbeddingSet maybe_select(const EmbeddingSet& set, const std::vector<std::string>& tags, bool given) {
  return given ? set.select_exact(parse_tags(tags)) : set;
}

std::vector<std::string> concept_names(const EmbeddingSet& set) {
  std::set<std::string> names;
  for (const auto& t : set.tags()) {
    for (const auto& c : concept_tags(t)) names.insert(c);
  }
  return {names.begin(), names.end()};
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep)) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

EmbeddingSet load_lorentz(const fs::path& p) {
  EmbeddingSet s = load_embeddings(p);
  if (!s.is_lorentz()) throw ConfigError(p.string() + " is not a Lorentz embedding file");
  return s;
}

std::vector<EntailmentCone> cones_from_file(const fs::path& p, double K) {
  const EmbeddingSet apexes = load_lorentz(p);
  std::vector<EntailmentCone> cones;
  for (std::size_t i = 0; i < apexes.size(); ++i) cones.emplace_back(apexes.point(i), K, apexes.labels()[i]);
  return cones;
}

bool is_gallery_row(const TagSet& t) { return !has_tag(t, kPromptTag) && !has_tag(t, kQueryTag); }

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

int run(int argc, char** argv) {
  Globals g;
  for (int i = 0; i < argc; ++i) g.argv.emplace_back(argv[i]);

  CLI::App app{"Hyperbolic concept directions, entailment cones and geodesic steering"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.add_option("--kappa", g.kappa, "Curvature magnitude")->check(CLI::PositiveNumber);
  app.add_option("--K", g.boundary_const, "Cone boundary constant")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Random seed (falls back to $HYCON_SEED)");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::Range(1u, 256u));

  int status = 0;

  // validate
  auto* validate = app.add_subcommand("validate", "Audit sheet and tangency constraints of a HYEB or HYDR file");
  std::string v_path;
  double v_tol = kLoadSheetTolerance;
  validate->add_option("file", v_path)->required();
  validate->add_option("--tol", v_tol, "Sheet tolerance")->check(CLI::PositiveNumber);
  validate->callback([&] {
    const std::string bytes = io_detail::read_file(v_path);
    if (bytes.rfind("HYDR", 0) == 0) {
      const DirectionFile d = decode_direction(bytes, v_path);
      print_json({{"file", v_path}, {"kind", "direction"}, {"version", d.version},
                  {"tangency_residual", tangency_residual(d.direction.direction().coords(), d.direction.anchor().coords())},
                  {"violations", 0}});
      return;
    }
    const EmbeddingSet set = load_embeddings(v_path, LoadOptions{false, v_tol});
    const auto bad = set.sheet_violations(v_tol);
    print_json({{"file", v_path}, {"kind", "embeddings"}, {"space", to_string(set.space())}, {"rows", set.size()},
                {"tolerance", v_tol}, {"violations", bad.size()}, {"violating_rows", bad}});
    if (!bad.empty()) status = 1;
  });

  // mean
  auto* mean = app.add_subcommand("mean", "Frechet mean of an embedding set");
  std::string m_in, m_out;
  std::vector<std::string> m_select;
  FrechetConfig m_cfg;
  mean->add_option("--in", m_in)->required();
  mean->add_option("--out", m_out)->required();
  auto* m_sel = mean->add_option("--select", m_select, "Exact tag set of rows to use")->delimiter(',');
  mean->add_option("--max-iters", m_cfg.max_iters);
  mean->add_option("--tol", m_cfg.tol);
  mean->callback([&] {
    m_cfg.threads = g.threads;
    const EmbeddingSet set = maybe_select(load_lorentz(m_in), m_select, m_sel->count() > 0);
    if (set.size() == 0) throw EmptySetError("no rows selected from " + m_in);
    const FrechetResult r = frechet_mean(set.points(), m_cfg);
    save_embeddings(EmbeddingSet::from_points({r.mean}, {"mean"}, {TagSet{}}, {g.boundary_const, "mean of " + m_in}),
                    m_out);
    const std::string digest = write_config(g, m_out, {{"command", "mean"}, {"in", m_in}, {"select", m_select},
                                                       {"max_iters", m_cfg.max_iters}, {"tol", m_cfg.tol}});
    print_json({{"iterations", r.iterations}, {"converged", r.converged},
                {"final_gradient_norm", r.final_gradient_norm}, {"digest", digest}});
  });

  // direction
  auto* direction = app.add_subcommand("direction", "Concept direction r = log_{mu+}(mu-)");
  std::string d_pos, d_neg, d_out, d_concept;
  std::vector<std::string> d_pos_tags, d_neg_tags;
  direction->add_option("--pos", d_pos, "Concept-present embeddings")->required();
  direction->add_option("--neg", d_neg, "Concept-absent embeddings")->required();
  direction->add_option("--out", d_out)->required();
  auto* d_pt = direction->add_option("--pos-tags", d_pos_tags)->delimiter(',');
  auto* d_nt = direction->add_option("--neg-tags", d_neg_tags)->delimiter(',');
  direction->add_option("--concept", d_concept);
  direction->callback([&] {
    const EmbeddingSet pos = maybe_select(load_lorentz(d_pos), d_pos_tags, d_pt->count() > 0);
    const EmbeddingSet neg = maybe_select(load_lorentz(d_neg), d_neg_tags, d_nt->count() > 0);
    FrechetConfig cfg;
    cfg.threads = g.threads;
    const ConceptDirection dir = build_concept_direction(pos, neg, cfg, d_concept);
    const std::string digest =
        write_config(g, d_out, {{"command", "direction"}, {"pos", d_pos}, {"neg", d_neg}, {"pos_tags", d_pos_tags},
                                {"neg_tags", d_neg_tags}, {"concept", d_concept}});
    save_direction(dir, d_out, std::stoull(digest, nullptr, 16));
    print_json({{"concept", d_concept}, {"length", dir.length()}, {"positives", pos.size()},
                {"negatives", neg.size()}, {"digest", digest}});
  });

  // steer
  auto* steer_cmd = app.add_subcommand("steer", "Geodesic steering z' = exp_z(lambda r_hat)");
  std::string s_dir, s_in, s_out, s_cones;
  std::vector<double> s_lambdas{3.0};
  std::vector<std::string> s_select;
  steer_cmd->add_option("--dir", s_dir)->required();
  steer_cmd->add_option("--in", s_in)->required();
  steer_cmd->add_option("--out", s_out)->required();
  steer_cmd->add_option("--lambda", s_lambdas, "Steering strength(s); several values produce a sweep")
      ->delimiter(',');
  auto* s_sel = steer_cmd->add_option("--select", s_select)->delimiter(',');
  steer_cmd->add_option("--cones", s_cones, "Apex file for sweep margins (one cone per row)");
  steer_cmd->callback([&] {
    if (s_lambdas.empty()) throw ConfigError("--lambda needs at least one value");
    const DirectionFile d = load_direction(s_dir);
    const EmbeddingSet in = maybe_select(load_lorentz(s_in), s_select, s_sel->count() > 0);
    const auto pts = in.points();
    std::vector<LorentzPoint> out_pts(pts.size(), pts.empty() ? d.direction.anchor() : pts.front());
    json params{{"command", "steer"}, {"dir", s_dir}, {"in", s_in}, {"lambda", s_lambdas}, {"select", s_select},
                {"cones", s_cones}};
    if (s_lambdas.size() == 1) {
      const double lambda = s_lambdas.front();
      parallel_for(pts.size(), g.threads, [&](std::size_t i) { out_pts[i] = steer(pts[i], d.direction, lambda); });
      EmbeddingSet::Matrix rows(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(in.dim()));
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vector v = in.space() == Space::lorentz_spatial ? Vector(out_pts[i].spatial()) : out_pts[i].coords();
        rows.row(static_cast<Eigen::Index>(i)) = v.transpose();
      }
      save_embeddings(EmbeddingSet(in.space(), std::move(rows), in.curvature(), in.labels(), in.tags(), in.metadata()),
                      s_out);
      const std::string digest = write_config(g, s_out, params);
      print_json({{"rows", pts.size()}, {"lambda", lambda}, {"digest", digest}});
      return;
    }
    std::vector<EntailmentCone> cones;
    if (!s_cones.empty()) cones = cones_from_file(s_cones, g.boundary_const);
    std::vector<std::vector<SweepPoint>> sweeps(pts.size());
    parallel_for(pts.size(), g.threads,
                 [&](std::size_t i) { sweeps[i] = steer_sweep(pts[i], d.direction, s_lambdas, cones); });
    std::vector<LorentzPoint> flat;
    std::vector<std::string> labels;
    std::vector<TagSet> tags;
    std::ostringstream csv;
    csv.precision(17);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (const auto& sp : sweeps[i]) {
        flat.push_back(sp.point);
        std::ostringstream lab;
        lab << in.labels()[i] << "@" << sp.lambda;
        labels.push_back(lab.str());
        tags.push_back(in.tags()[i]);
      }
      std::string body = sweep_csv(sweeps[i], cones);
      if (i > 0) body = body.substr(body.find('\n') + 1);
      std::istringstream lines(body);
      std::string line;
      bool header = i == 0;
      while (std::getline(lines, line)) {
        csv << (header ? std::string("row,") : in.labels()[i] + ",") << line << "\n";
        header = false;
      }
    }
    if (flat.empty()) throw EmptySetError("no rows to steer");
    save_embeddings(EmbeddingSet::from_points(flat, labels, tags, in.metadata()), s_out);
    io_detail::write_file(fs::path(s_out + ".sweep.csv"), csv.str());
    const std::string digest = write_config(g, s_out, params);
    print_json({{"rows", flat.size()}, {"lambdas", s_lambdas}, {"digest", digest}});
  });

  // euclid-steer
  auto* esteer = app.add_subcommand("euclid-steer", "Euclidean refusal-vector baseline x' = x - lambda proj_v(x)");
  std::string e_in, e_pos, e_neg, e_out, e_concept;
  double e_lambda = 1.0;
  std::vector<std::string> e_pos_tags, e_neg_tags;
  esteer->add_option("--in", e_in)->required();
  esteer->add_option("--pos", e_pos)->required();
  esteer->add_option("--neg", e_neg)->required();
  esteer->add_option("--out", e_out)->required();
  auto* e_pt = esteer->add_option("--pos-tags", e_pos_tags)->delimiter(',');
  auto* e_nt = esteer->add_option("--neg-tags", e_neg_tags)->delimiter(',');
  esteer->add_option("--lambda", e_lambda);
  esteer->add_option("--concept", e_concept);
  esteer->callback([&] {
    const EmbeddingSet in = load_embeddings(e_in);
    if (in.space() != Space::euclidean) throw ConfigError("euclid-steer needs a Euclidean input set");
    const auto v = build_euclidean_refusal(maybe_select(load_embeddings(e_pos), e_pos_tags, e_pt->count() > 0),
                                           maybe_select(load_embeddings(e_neg), e_neg_tags, e_nt->count() > 0),
                                           e_concept);
    EmbeddingSet::Matrix rows = in.rows();
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      rows.row(i) = euclidean_refusal_steer(in.vector(static_cast<std::size_t>(i)), v, e_lambda).transpose();
    }
    save_embeddings(EmbeddingSet(Space::euclidean, std::move(rows), std::nullopt, in.labels(), in.tags(),
                                 in.metadata()),
                    e_out);
    const std::string digest =
        write_config(g, e_out, {{"command", "euclid-steer"}, {"in", e_in}, {"pos", e_pos}, {"neg", e_neg},
                                {"pos_tags", e_pos_tags}, {"neg_tags", e_neg_tags}, {"lambda", e_lambda}});
    print_json({{"rows", in.size()}, {"vector_norm", v.vector().norm()}, {"digest", digest}});
  });

  // cone-check
  auto* cone_check = app.add_subcommand("cone-check", "Cone membership and margins");
  std::string c_apex, c_in, c_out;
  std::size_t c_row = 0;
  cone_check->add_option("--apex", c_apex, "File holding the apex")->required();
  cone_check->add_option("--apex-row", c_row);
  cone_check->add_option("--in", c_in)->required();
  cone_check->add_option("--out", c_out, "CSV of per-row membership");
  cone_check->callback([&] {
    const EmbeddingSet apexes = load_lorentz(c_apex);
    if (c_row >= apexes.size()) throw ConfigError("--apex-row is out of range");
    const EntailmentCone cone(apexes.point(c_row), g.boundary_const, apexes.labels()[c_row]);
    const EmbeddingSet in = load_lorentz(c_in);
    const auto pts = in.points();
    std::vector<Membership> m(pts.size());
    parallel_for(pts.size(), g.threads, [&](std::size_t i) { m[i] = contains(cone, pts[i]); });
    std::ostringstream csv;
    csv.precision(17);
    csv << "row,label,inside,margin\n";
    std::size_t inside = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      csv << i << "," << in.labels()[i] << "," << (m[i].inside ? 1 : 0) << "," << m[i].margin << "\n";
      inside += m[i].inside;
    }
    if (!c_out.empty()) {
      io_detail::write_file(c_out, csv.str());
      write_config(g, c_out, {{"command", "cone-check"}, {"apex", c_apex}, {"apex_row", c_row}, {"in", c_in}});
    }
    print_json({{"rows", m.size()}, {"inside", inside}, {"half_aperture", half_aperture(cone)}});
  });

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic concept hierarchy");
  std::string y_spec, y_out, y_comp, y_apex;
  synth->add_option("--spec", y_spec, "Hierarchy spec (JSON)")->required();
  synth->add_option("--out", y_out)->required();
  synth->add_option("--companion-out", y_comp, "Euclidean companion output");
  synth->add_option("--apex-out", y_apex, "Planted apexes output");
  synth->callback([&] {
    json spec_json;
    try {
      spec_json = json::parse(io_detail::read_file(y_spec));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("cannot parse ") + y_spec + ": " + e.what());
    }
    HierarchySpec spec = hierarchy_from_json(spec_json);
    if (!spec_json.contains("kappa")) spec.kappa = g.kappa;
    spec.noise_seed = resolve_seed(g, spec.noise_seed);
    const SyntheticWorld w = generate_hierarchy(spec);
    save_embeddings(w.set, y_out);
    if (!y_comp.empty()) {
      if (!w.companion) throw ConfigError("--companion-out needs companion_dim > 0 in the hierarchy JSON");
      save_embeddings(*w.companion, y_comp);
    }
    if (!y_apex.empty()) {
      std::vector<LorentzPoint> apexes;
      std::vector<std::string> labels;
      for (const auto& c : w.planted_cones) {
        apexes.push_back(c.apex());
        labels.push_back(c.label());
      }
      save_embeddings(EmbeddingSet::from_points(apexes, labels, std::vector<TagSet>(apexes.size()),
                                                {spec.boundary_const, "planted apexes"}),
                      y_apex);
    }
    json params = spec_json;
    params["noise_seed"] = spec.noise_seed;
    const std::string digest = write_config(g, y_out, {{"command", "synth"}, {"spec", params}});
    print_json({{"rows", w.set.size()}, {"seed", spec.noise_seed}, {"digest", digest}});
  });

  // census
  auto* census = app.add_subcommand("census", "Fraction of tagged samples inside their cone (intersections)");
  std::string n_in, n_out;
  std::vector<std::string> n_concepts, n_tuples;
  std::vector<double> n_grid;
  census->add_option("--in", n_in)->required();
  census->add_option("--out", n_out, "Report path (.json; a .csv is written alongside)")->required();
  census->add_option("--concepts", n_concepts)->delimiter(',');
  census->add_option("--tuple", n_tuples, "Concept tuple joined by '+'; repeatable");
  census->add_option("--K-grid", n_grid, "Boundary constants to report")->delimiter(',');
  census->callback([&] {
    const EmbeddingSet set = load_lorentz(n_in);
    if (n_concepts.empty()) n_concepts = concept_names(set);
    std::vector<std::vector<std::string>> tuples;
    if (n_tuples.empty()) {
      std::set<TagSet> seen;
      for (const auto& t : set.tags()) {
        const TagSet c = concept_tags(t);
        if (!c.empty() && !has_tag(t, kPromptTag)) seen.insert(c);
      }
      tuples.assign(seen.begin(), seen.end());
    } else {
      for (const auto& t : n_tuples) tuples.push_back(split(t, '+'));
    }
    if (n_grid.empty()) n_grid = {g.boundary_const};
    FrechetConfig cfg;
    cfg.threads = g.threads;
    json tables = json::array();
    std::string csv;
    for (double K : n_grid) {
      const auto cones = cones_from_prompts(set, n_concepts, K, cfg);
      const CensusTable table = cone_census(set, cones, tuples, g.threads);
      tables.push_back(to_json(table));
      std::string body = to_csv(table);
      if (!csv.empty()) body = body.substr(body.find('\n', body.find('\n') + 1) + 1);
      csv += body;
    }
    const std::string digest = write_config(g, n_out, {{"command", "census"}, {"in", n_in}, {"concepts", n_concepts},
                                                       {"tuples", tuples}, {"K_grid", n_grid}});
    io_detail::write_file(n_out, json{{"tables", tables}, {"config_digest", digest}}.dump(2) + "\n");
    io_detail::write_file(with_extension(n_out, ".csv"), csv);
    print_json({{"tables", tables.size()}, {"digest", digest}});
  });

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "Steering retrieval experiment with R@1/5/10 per cone");
  std::string r_in, r_out, r_queries, r_control;
  std::vector<std::string> r_concepts, r_dirs;
  std::vector<double> r_lambdas{1, 2, 3, 4, 5};
  bool r_no_steer = false;
  retrieve->add_option("--in", r_in, "World with prompts, gallery and queries")->required();
  retrieve->add_option("--out", r_out, "Report path (.json; a .csv is written alongside)")->required();
  retrieve->add_option("--concepts", r_concepts, "Cones to evaluate")->delimiter(',');
  retrieve->add_option("--control", r_control, "Control concept (never steered towards)");
  retrieve->add_option("--queries", r_queries, "Query file (defaults to the world's @query rows)");
  retrieve->add_option("--dir", r_dirs, "Direction files; built from prompts when absent");
  retrieve->add_option("--lambda", r_lambdas)->delimiter(',');
  retrieve->add_flag("--no-steer", r_no_steer, "Evaluate the queries as given");
  retrieve->callback([&] {
    const EmbeddingSet world = load_lorentz(r_in);
    if (r_concepts.empty()) r_concepts = concept_names(world);
    FrechetConfig cfg;
    cfg.threads = g.threads;
    const auto cones = cones_from_prompts(world, r_concepts, g.boundary_const, cfg);
    const EmbeddingSet gallery = world.filter([&](std::size_t i) { return is_gallery_row(world.tags()[i]); });
    const std::vector<LorentzPoint> queries =
        r_queries.empty() ? world.select_exact({kQueryTag}).points() : load_lorentz(r_queries).points();
    std::vector<ConceptDirection> dirs;
    if (!r_no_steer) {
      if (!r_dirs.empty()) {
        for (const auto& p : r_dirs) dirs.push_back(load_direction(p).direction);
      } else {
        const EmbeddingSet neutral = world.select_exact({kPromptTag});
        for (const auto& c : r_concepts) {
          if (c == r_control) continue;
          dirs.push_back(build_concept_direction(neutral, world.select_exact({c, kPromptTag}), cfg, c));
        }
      }
    }
    RetrievalReport rep = steering_retrieval_experiment(gallery, cones, dirs, r_lambdas, queries, r_control,
                                                        g.threads);
    rep.config_digest = write_config(g, r_out, {{"command", "retrieve"}, {"in", r_in}, {"concepts", r_concepts},
                                                {"control", r_control}, {"queries", r_queries}, {"dirs", r_dirs},
                                                {"lambda", r_lambdas}, {"no_steer", r_no_steer}});
    io_detail::write_file(r_out, to_json(rep).dump(2) + "\n");
    io_detail::write_file(with_extension(r_out, ".csv"), to_csv(rep));
    json best = json::object();
    for (const auto& b : rep.best) {
      const auto ti = static_cast<std::size_t>(
          std::find(rep.cones.begin(), rep.cones.end(), b.target) - rep.cones.begin());
      best[b.target] = {{"lambda", b.lambda}, {"R@1", b.recall[ti][0]}};
    }
    print_json({{"queries", queries.size()}, {"best", best}, {"digest", rep.config_digest}});
  });

  // align-study
  auto* align = app.add_subcommand("align-study", "Companion-space cosine alignment of cone members");
  std::string a_in, a_comp, a_out;
  std::vector<std::string> a_concepts;
  std::size_t a_rounds = 20;
  align->add_option("--in", a_in)->required();
  align->add_option("--companion", a_comp)->required();
  align->add_option("--out", a_out, "Report path (.json; a .csv is written alongside)")->required();
  align->add_option("--concepts", a_concepts)->delimiter(',');
  align->add_option("--null-rounds", a_rounds, "Permutation-null rounds");
  align->callback([&] {
    const EmbeddingSet set = load_lorentz(a_in);
    const EmbeddingSet comp = load_embeddings(a_comp);
    if (a_concepts.empty()) a_concepts = concept_names(set);
    FrechetConfig cfg;
    cfg.threads = g.threads;
    const auto cones = cones_from_prompts(set, a_concepts, g.boundary_const, cfg);
    const AlignmentReport rep = alignment_study(set, cones, comp, g.threads);
    const std::uint64_t seed = resolve_seed(g, 0);
    std::vector<double> null_sep(cones.size(), 0.0);
    for (std::size_t r = 0; r < a_rounds; ++r) {
      const AlignmentReport nr = alignment_study(set, cones, shuffle_companion(set, comp, seed + r), g.threads);
      for (std::size_t c = 0; c < cones.size(); ++c) null_sep[c] += nr.rows[c].separation() / double(a_rounds);
    }
    json doc = to_json(rep);
    doc["null_rounds"] = a_rounds;
    doc["null_separation"] = null_sep;
    doc["config_digest"] = write_config(g, a_out, {{"command", "align-study"}, {"in", a_in}, {"companion", a_comp},
                                                   {"concepts", a_concepts}, {"null_rounds", a_rounds},
                                                   {"seed", seed}});
    io_detail::write_file(a_out, doc.dump(2) + "\n");
    std::string csv = to_csv(rep);
    std::ostringstream extra;
    extra.precision(17);
    extra << "# permutation null (" << a_rounds << " rounds)\nconcept,null_separation\n";
    for (std::size_t c = 0; c < cones.size(); ++c) extra << cones[c].label() << "," << null_sep[c] << "\n";
    io_detail::write_file(with_extension(a_out, ".csv"), csv + extra.str());
    json seps = json::object();
    for (const auto& row : rep.rows) seps[row.concept_name] = row.separation();
    print_json({{"separation", seps}, {"null_separation", null_sep}, {"overlap", rep.overlap}});
  });

  // adapter-fit
  auto* afit = app.add_subcommand("adapter-fit", "Least-squares affine adapter from log_0(x) to targets");
  std::string f_src, f_tgt, f_out;
  double f_ridge = kDefaultRidge;
  afit->add_option("--source", f_src)->required();
  afit->add_option("--target", f_tgt)->required();
  afit->add_option("--out", f_out)->required();
  afit->add_option("--ridge", f_ridge)->check(CLI::NonNegativeNumber);
  afit->callback([&] {
    const AdapterFit fit = fit_adapter(load_lorentz(f_src), load_embeddings(f_tgt), f_ridge);
    save_adapter(fit.adapter, f_out);
    const std::string digest =
        write_config(g, f_out, {{"command", "adapter-fit"}, {"source", f_src}, {"target", f_tgt}, {"ridge", f_ridge}});
    print_json({{"objective", fit.objective}, {"zero_map_objective", fit.zero_map_objective},
                {"rms_residual", fit.rms_residual}, {"max_abs_residual", fit.max_abs_residual}, {"digest", digest}});
  });

  // adapter-apply
  auto* aapply = app.add_subcommand("adapter-apply", "Map Lorentz embeddings through a fitted adapter");
  std::string p_adapter, p_in, p_out;
  aapply->add_option("--adapter", p_adapter)->required();
  aapply->add_option("--in", p_in)->required();
  aapply->add_option("--out", p_out)->required();
  aapply->callback([&] {
    const LinearAdapter a = load_adapter(p_adapter);
    const EmbeddingSet in = load_lorentz(p_in);
    EmbeddingSet::Matrix rows(static_cast<Eigen::Index>(in.size()), a.target_dim());
    for (std::size_t i = 0; i < in.size(); ++i) {
      rows.row(static_cast<Eigen::Index>(i)) = apply_adapter(a, in.point(i)).transpose();
    }
    save_embeddings(EmbeddingSet(Space::euclidean, std::move(rows), std::nullopt, in.labels(), in.tags(),
                                 in.metadata()),
                    p_out);
    write_config(g, p_out, {{"command", "adapter-apply"}, {"adapter", p_adapter}, {"in", p_in}});
    print_json({{"rows", in.size()}});
  });

  // project2d
  auto* proj = app.add_subcommand("project2d", "Poincare-ball coordinates for plotting");
  std::string q_in, q_out;
  proj->add_option("--in", q_in)->required();
  proj->add_option("--out", q_out)->required();
  proj->callback([&] {
    const EmbeddingSet in = load_lorentz(q_in);
    std::ostringstream csv;
    csv.precision(17);
    csv << "row,label,tags,px,py\n";
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Vector b = poincare_project(in.point(i));
      std::string tags;
      for (const auto& t : in.tags()[i]) tags += (tags.empty() ? "" : "|") + t;
      csv << i << "," << in.labels()[i] << "," << tags << "," << b(0) << "," << (b.size() > 1 ? b(1) : 0.0) << "\n";
    }
    io_detail::write_file(q_out, csv.str());
    write_config(g, q_out, {{"command", "project2d"}, {"in", q_in}});
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const hycon::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.category()) {
      case hycon::Error::Category::validation: return 1;
      case hycon::Error::Category::configuration: return 2;
      case hycon::Error::Category::io: return 3;
    }
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
