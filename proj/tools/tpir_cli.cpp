// Command-line front end: derive scheme parameters, generate databases, run
// retrieval rounds in-process or against live servers, and run the audits.
// Exit codes: 0 success/pass, 1 failure/fail, 2 usage error.

#include <CLI11.hpp>

#include <chrono>
#include <condition_variable>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "tpir/tpir.hpp"

namespace {

using namespace tpir;

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const Bytes& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

void write_report(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open report file " + path);
  out << text;
}

SchemeParams derive_checked(u32 M, u32 N, u32 T, u64 q_opt) {
  const u64 q = q_opt == 0 ? default_q(N) : q_opt;
  return derive_params(M, N, T, q);
}

int cmd_params(u32 M, u32 N, u32 T, u64 q_opt) {
  const SchemeParams p = derive_checked(M, N, T, q_opt);
  const auto [head, tail] = per_server_counts(p);
  std::cout << "M=" << p.M << " N=" << p.N << " T=" << p.T << " q=" << p.q << "\n";
  std::cout << "d=" << p.d << " n=" << p.n << " t=" << p.t << "\n";
  std::cout << "L=" << p.L << " Ltilde=" << p.Ltilde << "\n";
  std::cout << "  i      d_i  alpha_i   beta_i\n";
  for (u32 i = 1; i <= p.M; ++i) {
    std::cout << std::setw(3) << i << std::setw(9)
              << (i <= p.M - 1 ? std::to_string(p.d_arr[i - 1]) : std::string("-"))
              << std::setw(9) << p.alpha[i - 1] << std::setw(9) << p.beta[i - 1] << "\n";
  }
  std::cout << "answers per server: " << head << " (servers 1.." << p.T << "), " << tail
            << " (servers " << p.T + 1 << ".." << p.N << ")\n";
  std::cout << "download D=" << p.D << "\n";
  std::cout << "rate=" << p.rate.str() << "\n";
  std::cout << "capacity=" << capacity(M, N, T).str() << "\n";
  return 0;
}

int cmd_gendb(u32 M, u32 N, u32 T, u64 q_opt, u64 seed, const std::string& out_path) {
  const SchemeParams p = derive_checked(M, N, T, q_opt);
  const PrimeField F(p.q);
  Rng rng(seed);
  const RecordSet db = random_records(F, p.M, p.L, rng);
  write_file(out_path, encode_db(db));
  std::cout << "wrote " << out_path << ": " << p.M << " records of " << p.L
            << " symbols over F_" << p.q << "\n";
  return 0;
}

int cmd_retrieve(const std::string& db_path, u32 N, u32 T, u32 theta1, u64 seed,
                 const std::string& servers_csv, const std::string& report_path) {
  const RecordSet db = decode_db(read_file(db_path));
  const u32 M = db.count();
  if (theta1 < 1 || theta1 > M)
    throw std::invalid_argument("theta must be in [1, " + std::to_string(M) + "]");
  const SchemeParams p = derive_params(M, N, T, db.q);
  if (p.L != db.record_len)
    throw std::invalid_argument("database has records of length " + std::to_string(db.record_len) +
                                " but (M,N,T) requires " + std::to_string(p.L));
  const PrimeField F(p.q);
  const MdsCode code = make_mds(p.N, p.T, F);
  Rng rng(seed);
  const u32 theta = theta1 - 1;

  ClientRound round = client_query(p, theta, code, rng);
  std::vector<Answer> answers;
  if (servers_csv.empty()) {
    answers.reserve(p.N);
    for (u32 j = 0; j < p.N; ++j) answers.push_back(server_answer(round.queries[j], db));
  } else {
    std::vector<Endpoint> eps;
    std::stringstream ss(servers_csv);
    std::string item;
    while (std::getline(ss, item, ',')) eps.push_back(parse_endpoint(item));
    if (eps.size() != p.N)
      throw std::invalid_argument("need " + std::to_string(p.N) + " endpoints, got " +
                                  std::to_string(eps.size()));
    answers = remote_answers(eps, round.queries);
  }
  u64 downloaded = 0;
  for (const Answer& a : answers) downloaded += a.values.size();
  const std::vector<u64> got = reconstruct(round.state, answers, code);
  const bool ok = got == db.records[theta];
  std::cout << "downloaded " << downloaded << " symbols, rate " << p.rate.str() << ", "
            << (ok ? "SUCCESS" : "FAIL") << "\n";
  std::ostringstream rep;
  rep << "downloaded=" << downloaded << "\n"
      << "rate=" << p.rate.str() << "\n"
      << "success=" << (ok ? "true" : "false") << "\n";
  write_report(report_path, rep.str());
  return ok ? 0 : 1;
}

int cmd_serve(const std::string& db_path, u32 port) {
  const RecordSet db = decode_db(read_file(db_path));
  Server server(db, static_cast<std::uint16_t>(port));
  std::cout << "serving " << db.count() << " records of " << db.record_len << " symbols over F_"
            << db.q << " on port " << server.port() << std::endl;
  std::mutex mu;
  std::condition_variable cv;
  std::unique_lock<std::mutex> lk(mu);
  cv.wait(lk, [] { return false; });  // run until killed
  return 0;
}

int cmd_audit(const std::string& mode, u32 M, u32 N, u32 T, u64 q_opt, u64 seed, u64 trials,
              u64 samples, const std::string& report_path) {
  const SchemeParams p = derive_checked(M, N, T, q_opt);
  AuditReport rep;
  if (mode == "structure") {
    rep = audit_structure(p);
  } else if (mode == "correctness") {
    rep = audit_correctness(p, trials, seed);
  } else if (mode == "privacy-exact") {
    try {
      rep = audit_privacy_exact(p);
    } catch (const infeasible_enumeration& e) {
      std::cerr << "error: " << e.what() << "\n";
      std::cerr << "hint: run --mode privacy-sampled for this parameter set\n";
      return 2;
    }
  } else if (mode == "privacy-sampled") {
    rep = audit_privacy_sampled(p, samples, seed);
  } else {
    throw std::invalid_argument("unknown audit mode '" + mode + "'");
  }
  std::cout << rep.to_text();
  write_report(report_path, rep.to_text());
  return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capacity-achieving T-private information retrieval toolkit"};
  app.require_subcommand(1);

  u32 M = 0, N = 0, T = 0, theta = 0, port = 0;
  u64 q = 0, seed = 0, trials = 100, samples = 100000;
  std::string out_path, db_path, servers_csv, report_path, mode;

  auto add_mnt = [&](CLI::App* sub) {
    sub->add_option("-M", M, "number of records (>= 2)")->required();
    sub->add_option("-N", N, "number of servers")->required();
    sub->add_option("-T", T, "collusion threshold (1 <= T < N)")->required();
    sub->add_option("-q", q, "prime field modulus (default: smallest prime >= N)");
  };

  CLI::App* sc_params = app.add_subcommand("params", "derive and print all scheme integers");
  add_mnt(sc_params);

  CLI::App* sc_gendb = app.add_subcommand("gendb", "write a random database file");
  add_mnt(sc_gendb);
  sc_gendb->add_option("--seed", seed, "random seed (default 0)");
  sc_gendb->add_option("--out", out_path, "output path")->required();

  CLI::App* sc_retrieve = app.add_subcommand("retrieve", "run one retrieval round");
  sc_retrieve->add_option("--db", db_path, "database file")->required();
  sc_retrieve->add_option("-N", N, "number of servers")->required();
  sc_retrieve->add_option("-T", T, "collusion threshold")->required();
  sc_retrieve->add_option("--theta", theta, "record index to retrieve, 1-based")->required();
  sc_retrieve->add_option("--seed", seed, "random seed (default 0)");
  sc_retrieve->add_option("--servers", servers_csv,
                          "comma-separated host:port endpoints (default: in-process)");
  sc_retrieve->add_option("--report", report_path, "write key=value report lines to this file");

  CLI::App* sc_serve = app.add_subcommand("serve", "answer framed queries over TCP");
  sc_serve->add_option("--db", db_path, "database file")->required();
  sc_serve->add_option("--port", port, "listening port (0 picks one)")->required();

  CLI::App* sc_audit = app.add_subcommand("audit", "verify scheme properties");
  sc_audit->add_option("--mode", mode, "structure | correctness | privacy-exact | privacy-sampled")
      ->required();
  add_mnt(sc_audit);
  sc_audit->add_option("--seed", seed, "random seed (default 0)");
  sc_audit->add_option("--trials", trials, "correctness trials (default 100)");
  sc_audit->add_option("--samples", samples, "privacy samples per theta (default 100000)");
  sc_audit->add_option("--report", report_path, "write the report to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sc_params->parsed()) return cmd_params(M, N, T, q);
    if (sc_gendb->parsed()) return cmd_gendb(M, N, T, q, seed, out_path);
    if (sc_retrieve->parsed())
      return cmd_retrieve(db_path, N, T, theta, seed, servers_csv, report_path);
    if (sc_serve->parsed()) return cmd_serve(db_path, port);
    if (sc_audit->parsed())
      return cmd_audit(mode, M, N, T, q, seed, trials, samples, report_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
