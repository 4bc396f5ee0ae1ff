// Copyright 2026 The forgeci Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "forgeci/master_service.hpp"

#include <iostream>
#include <regex>

#include "forgeci/error.hpp"
#include "forgeci/process.hpp"
#include "forgeci/quality.hpp"
#include "httplib.h"

namespace forgeci::master {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

model::Timestamp now() { return model::Clock::now(); }

int http_status(Errc code) {
  switch (code) {
    case Errc::MalformedPayload:
    case Errc::BadSha:
    case Errc::InvalidArgument:
    case Errc::MalformedContext:
    case Errc::ConfigInvalid:
      return 400;
    case Errc::BadSignature:
      return 401;
    case Errc::Unauthorized:
      return 403;
    case Errc::NoSuchJob:
    case Errc::UnknownBuild:
    case Errc::UnknownContext:
      return 404;
    case Errc::NotManuallyTriggerable:
    case Errc::NotRunning:
      return 409;
    default:
      return 500;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

template <typename Fn>
void handle(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_json(res, http_status(e.code()), {{"error", e.name()}, {"detail", e.detail()}});
  } catch (const json::exception& e) {
    send_json(res, 400, {{"error", "MalformedPayload"}, {"detail", e.what()}});
  } catch (const std::exception& e) {
    send_json(res, 500, {{"error", "InternalError"}, {"detail", e.what()}});
  }
}

json build_json(const BuildRecord& r, const std::string& public_url) {
  json j = to_json(r);
  j["console_url"] = public_url + console_path(r.build);
  return j;
}

json group_json(const model::TriggerGroup& g, const Scheduler& s) {
  json j = to_json(g);
  json builds = json::array();
  for (model::BuildId id : g.builds) {
    if (const BuildRecord* r = s.find(id)) builds.push_back(build_json(*r, s.config().resolved_public_url()));
  }
  j["builds"] = builds;
  return j;
}

json body_of(const httplib::Request& req) {
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::MalformedPayload, "body must be a JSON object");
  return j;
}

std::string actor_of(const httplib::Request& req) {
  const std::string a = req.get_header_value("X-Actor");
  return a.empty() ? "anonymous" : a;
}

model::BuildId id_of(const std::string& s) {
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw Error(Errc::UnknownBuild, s);
  }
}

class ConnectionLink : public AgentLink {
 public:
  explicit ConnectionLink(std::shared_ptr<net::Connection> conn) : conn_(std::move(conn)) {}
  std::uint64_t id() const override { return conn_->id(); }
  void send(protocol::MessageKind kind, const json& body) override { conn_->send(kind, body); }
  void close() override { conn_->shutdown(); }

 private:
  std::shared_ptr<net::Connection> conn_;
};

}  // namespace

Strand::Strand() {
  worker_ = std::thread([this] {
    while (true) {
      std::function<void()> task;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stopping_ || !tasks_.empty(); });
        if (tasks_.empty()) return;
        task = std::move(tasks_.front());
        tasks_.pop_front();
      }
      task();
    }
  });
}

Strand::~Strand() { stop(); }

void Strand::post(std::function<void()> task) {
  std::lock_guard lock(mu_);
  tasks_.push_back(std::move(task));
  cv_.notify_one();
}

void Strand::stop() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
    cv_.notify_all();
  }
  if (worker_.joinable()) worker_.join();
}

MasterService::MasterService(MasterOptions options) : options_(std::move(options)) {
  const config::MasterConfig& c = options_.config;
  vcs_ = options_.vcs;
  if (!vcs_) {
    if (!c.status_file.empty()) {
      vcs_ = std::make_shared<status::FileStatusClient>(c.status_file);
    } else {
      vcs_ = std::make_shared<status::InMemoryStatusClient>();
    }
  }
  notify_ = options_.notify;
  if (!notify_) {
    if (!c.notify_file.empty()) {
      notify_file_.open(c.notify_file, std::ios::app);
      notify_ = std::make_shared<status::StreamSink>(notify_file_);
    } else {
      notify_ = std::make_shared<status::StreamSink>(std::cerr);
    }
  }
  store_ = c.state_dir.empty() ? std::make_unique<BuildStore>()
                               : std::make_unique<BuildStore>(c.state_dir);
}

MasterService::~MasterService() { stop(); }

std::string MasterService::resolve_sha(std::string_view abbreviated) {
  try {
    return vcs_->resolve_sha(abbreviated);
  } catch (const Error& e) {
    const fs::path repo = scheduler_->config().repo_path;
    if (repo.empty() || !fs::exists(repo / ".git")) throw;
    const auto r = process::run_capture(
        {"git", "-C", repo.string(), "rev-parse", "--verify", "--quiet",
         std::string(abbreviated) + "^{commit}"});
    std::string full(r.output.substr(0, r.output.find('\n')));
    if (r.exit_code != 0 || !model::is_full_sha(full)) throw;
    return full;
  }
}

void MasterService::start() {
  config::MasterConfig& c = options_.config;
  listener_ = std::make_unique<net::Listener>(c.bind, c.port);
  agent_port_ = listener_->port();

  http_ = std::make_unique<httplib::Server>();
  const int hp = c.http_port == 0 ? http_->bind_to_any_port(c.bind)
                                  : (http_->bind_to_port(c.bind, c.http_port) ? c.http_port : -1);
  if (hp <= 0) {
    throw Error(Errc::ConnectionFailed, "cannot bind HTTP port " + std::to_string(c.http_port));
  }
  http_port_ = static_cast<std::uint16_t>(hp);
  if (c.public_url.empty()) c.public_url = "http://127.0.0.1:" + std::to_string(http_port_);

  SchedulerDeps deps;
  deps.store = store_.get();
  deps.vcs = vcs_.get();
  deps.notify = notify_.get();
  deps.retry = options_.retry;
  deps.resolve_sha = [this](std::string_view s) { return resolve_sha(s); };
  deps.pipeline_source = [this](const model::JobDefinition& job, const model::CommitRef& commit) {
    const fs::path repo = scheduler_->config().repo_path;
    if (repo.empty()) throw Error(Errc::IoError, "repo_path is not configured");
    if (fs::exists(repo / ".git")) {
      const auto r = process::run_capture(
          {"git", "-C", repo.string(), "show", commit.sha + ":" + job.pipeline_path});
      if (r.exit_code == 0) return r.output;
    }
    return quality::read_file(repo / job.pipeline_path);
  };
  scheduler_ = std::make_unique<Scheduler>(c, std::move(deps), now());
  call([](Scheduler& s) {
    s.restore(now());
    return 0;
  });

  install_routes();
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
  http_thread_ = std::thread([this] { http_->listen_after_bind(); });
  timer_thread_ = std::thread([this] { timer_loop(); });
  http_->wait_until_ready();
}

void MasterService::stop() {
  if (!running_.exchange(false)) return;
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
    cv_.notify_all();
  }
  http_->stop();
  if (http_thread_.joinable()) http_thread_.join();
  listener_->close();
  if (accept_thread_.joinable()) accept_thread_.join();
  {
    std::lock_guard lock(mu_);
    for (auto& conn : connections_) conn->shutdown();
  }
  for (auto& t : connection_threads_) {
    if (t.joinable()) t.join();
  }
  if (timer_thread_.joinable()) timer_thread_.join();
  strand_.stop();
}

void MasterService::wait() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return stopping_.load(); });
}

void MasterService::accept_loop() {
  while (true) {
    net::Socket s;
    try {
      s = listener_->accept();
    } catch (const Error& e) {
      std::cerr << "forgeci master: " << e.what() << '\n';
      continue;
    }
    if (!s.valid()) return;
    auto conn = std::make_shared<net::Connection>(std::move(s));
    std::lock_guard lock(mu_);
    if (stopping_) {
      conn->shutdown();
      return;
    }
    connections_.push_back(conn);
    connection_threads_.emplace_back([this, conn] { serve_connection(conn); });
  }
}

void MasterService::serve_connection(std::shared_ptr<net::Connection> conn) {
  auto link = std::make_shared<ConnectionLink>(conn);
  bool registered = false;
  try {
    auto first = conn->receive();
    if (first && first->kind != protocol::MessageKind::kHello) {
      throw Error(Errc::MalformedFrame, "expected HELLO");
    }
    if (first) {
      const protocol::AgentHello hello = protocol::hello_from_json(first->body);
      registered = call([&](Scheduler& s) {
        const bool ok = s.agent_hello(link, hello, now());
        if (ok) s.dispatch(now());
        return ok;
      });
      while (registered) {
        auto msg = conn->receive();
        if (!msg) break;
        call([&](Scheduler& s) {
          s.agent_message(link->id(), *msg, now());
          s.dispatch(now());
          return 0;
        });
      }
    }
  } catch (const Error& e) {
    try {
      conn->send(protocol::MessageKind::kError,
                 protocol::to_json(protocol::ErrorBody{std::string(e.name()), e.detail()}));
    } catch (const Error&) {
    }
  }
  conn->shutdown();
  if (registered && !stopping_) {
    call([&](Scheduler& s) {
      s.agent_disconnected(link->id(), now());
      s.dispatch(now());
      return 0;
    });
  }
  std::lock_guard lock(mu_);
  connections_.remove(conn);
}

void MasterService::timer_loop() {
  std::unique_lock lock(mu_);
  while (!cv_.wait_for(lock, options_.tick, [&] { return stopping_.load(); })) {
    lock.unlock();
    const fs::path path = options_.config_path;
    call([&](Scheduler& s) {
      const auto t = now();
      for (const auto& name : s.check_heartbeats(t)) {
        std::cerr << "forgeci master: agent " << name << " lost (heartbeat timeout)\n";
      }
      try {
        const config::MasterConfig current = s.config();
        const auto r = s.maintenance_reload(t, [&] {
          if (path.empty()) return current;
          config::MasterConfig fresh = config::load_master_config(path);
          if (fresh.public_url.empty()) fresh.public_url = current.public_url;
          return fresh;
        });
        if (r.reloaded) std::cerr << "forgeci master: configuration reloaded\n";
      } catch (const Error& e) {
        std::cerr << "forgeci master: reload failed, keeping the old configuration: " << e.what()
                  << '\n';
      }
      s.dispatch(t);
      return 0;
    });
    lock.lock();
  }
}

void MasterService::install_routes() {
  httplib::Server& svr = *http_;

  svr.Post("/webhook", [this](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] {
      const std::string secret = call([](Scheduler& s) { return s.config().secret; });
      if (secret.empty()) throw Error(Errc::BadSignature, "no webhook secret configured");
      if (!verify_signature(secret, req.body, req.get_header_value("X-Signature"))) {
        throw Error(Errc::BadSignature, "signature mismatch");
      }
      const WebhookEvent event = parse_webhook(req.get_header_value("X-Event-Kind"), req.body);
      const std::string delivery = req.get_header_value("X-Delivery-Id");
      const json out = call([&](Scheduler& s) -> json {
        const IngestResult r = s.ingest_webhook(event, delivery, now());
        s.dispatch(now());
        if (const auto* ignored = std::get_if<Ignored>(&r)) return {{"ignored", ignored->reason}};
        return group_json(std::get<model::TriggerGroup>(r), s);
      });
      send_json(res, out.contains("ignored") ? 200 : 202, out);
    });
  });

  svr.Post(R"(/api/jobs/([^/]+)/trigger)", [this](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] {
      const std::string job = req.matches[1];
      const json body = body_of(req);
      if (!body.contains("sha") || !body["sha"].is_string()) {
        throw Error(Errc::BadSha, "body needs a \"sha\" string");
      }
      const std::string sha = body["sha"];
      const std::string actor = actor_of(req);
      send_json(res, 201, call([&](Scheduler& s) {
                  const auto g = s.manual_trigger(job, sha, actor, now());
                  s.dispatch(now());
                  return group_json(g, s);
                }));
    });
  });

  svr.Get("/api/jobs", [this](const httplib::Request&, httplib::Response& res) {
    handle(res, [&] {
      send_json(res, 200, call([](Scheduler& s) {
                  json jobs = json::array();
                  for (const auto& j : s.config().jobs) {
                    json versions = json::array();
                    for (const auto& v : j.versions) versions.push_back(v.value);
                    jobs.push_back({{"name", j.name},
                                    {"trigger", model::to_string(j.trigger)},
                                    {"platform", j.platform.value},
                                    {"versions", versions},
                                    {"manual", model::is_manual(j.trigger)}});
                  }
                  return jobs;
                }));
    });
  });

  svr.Get(R"(/api/jobs/([^/]+)/trend)", [this](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] {
      const std::string job = req.matches[1];
      const TrendSeries t = call([&](Scheduler& s) { return s.build_time_trend(job); });
      json points = json::array();
      for (const auto& p : t.points) {
        points.push_back({{"build_id", p.build_id},
                          {"number", p.number},
                          {"duration_ms", p.duration_ms},
                          {"state", model::to_string(p.state)}});
      }
      send_json(res, 200, {{"job", t.job_name}, {"points", points}});
    });
  });

  svr.Get(R"(/api/builds/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] {
      const model::BuildId id = id_of(req.matches[1]);
      send_json(res, 200, call([&](Scheduler& s) {
                  const BuildRecord* r = s.find(id);
                  if (!r) throw Error(Errc::UnknownBuild, std::to_string(id));
                  return build_json(*r, s.config().resolved_public_url());
                }));
    });
  });

  svr.Post(R"(/api/builds/(\d+)/relaunch)", [this](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] {
      const model::BuildId id = id_of(req.matches[1]);
      const std::string actor = actor_of(req);
      send_json(res, 201, call([&](Scheduler& s) {
                  const auto g = s.relaunch(id, actor, now());
                  s.dispatch(now());
                  return group_json(g, s);
                }));
    });
  });

  svr.Post(R"(/api/builds/(\d+)/abort)", [this](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] {
      const model::BuildId id = id_of(req.matches[1]);
      send_json(res, 202, call([&](Scheduler& s) {
                  s.abort(id, now());
                  s.dispatch(now());
                  return build_json(*s.find(id), s.config().resolved_public_url());
                }));
    });
  });

  svr.Get(R"(/api/groups/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] {
      const std::string id = req.matches[1];
      send_json(res, 200, call([&](Scheduler& s) {
                  const auto g = s.group(id);
                  if (!g) throw Error(Errc::UnknownBuild, "no group " + id);
                  return group_json(*g, s);
                }));
    });
  });

  svr.Get(R"(/api/status/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] {
      const std::string sha = req.matches[1];
      if (!model::is_full_sha(sha)) throw Error(Errc::BadSha, sha);
      send_json(res, 200, call([&](Scheduler& s) {
                  const auto m = s.matrix(sha);
                  json cells = json::array();
                  for (const auto& [cell, st] : m.cells) {
                    cells.push_back({{"platform", cell.first.value},
                                     {"version", cell.second.value},
                                     {"state", status::to_string(st)}});
                  }
                  json platforms = json::object();
                  for (const auto& [p, st] : m.per_platform) platforms[p.value] = status::to_string(st);
                  json statuses = json::array();
                  for (const auto& st : vcs_->list(sha)) {
                    statuses.push_back({{"context", st.context},
                                        {"state", status::to_string(st.state)},
                                        {"target_url", st.target_url},
                                        {"description", st.description}});
                  }
                  json builds = json::array();
                  for (const BuildRecord* r : s.builds_for_sha(sha)) {
                    builds.push_back(build_json(*r, s.config().resolved_public_url()));
                  }
                  return json{{"sha", sha},
                              {"global", status::to_string(m.global)},
                              {"platforms", platforms},
                              {"cells", cells},
                              {"statuses", statuses},
                              {"builds", builds}};
                }));
    });
  });

  svr.Post(R"(/api/status/([0-9a-f]+)/override)", [this](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] {
      const std::string sha = req.matches[1];
      const json body = body_of(req);
      const auto state = status::parse_status_state(body.value("state", ""));
      if (!state) throw Error(Errc::MalformedPayload, "state must be pending, success or failure");
      const std::string context = body.value("context", "");
      const std::string actor = actor_of(req);
      const auto st = call([&](Scheduler& s) {
        return s.override_status(sha, context, *state, actor, now());
      });
      send_json(res, 200, {{"sha", st.sha}, {"context", st.context}, {"state", status::to_string(st.state)}});
    });
  });

  svr.Get("/api/agents", [this](const httplib::Request&, httplib::Response& res) {
    handle(res, [&] {
      send_json(res, 200, call([](Scheduler& s) {
                  json out = json::array();
                  for (const auto& a : s.agents()) {
                    out.push_back({{"name", a.name},
                                   {"platform", a.platform.value},
                                   {"state", to_string(a.state)},
                                   {"build", a.build ? json(*a.build) : json(nullptr)},
                                   {"last_seen", to_epoch_ms(a.last_seen)},
                                   {"cores", a.hello.cores},
                                   {"memory_mb", a.hello.memory_mb},
                                   {"os", a.hello.os_descriptor}});
                  }
                  return out;
                }));
    });
  });

  svr.Get(R"(/badges/([^/]+)\.svg)", [this](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] {
      const model::PlatformLabel platform{req.matches[1]};
      const auto state = call([&](Scheduler& s) { return s.badge_state(platform); });
      res.set_header("Cache-Control", "no-cache");
      res.set_content(status::render_badge(platform, state).svg, "image/svg+xml");
    });
  });

  svr.Get(R"(/job/([^/]+)/(\d+)/([^/]+)/([^/]+)/console)",
          [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&] {
              const std::string job = req.matches[1];
              const std::uint64_t number = std::stoull(req.matches[2]);
              const std::string version = req.matches[3];
              const std::string platform = req.matches[4];
              std::uint64_t offset = 0;
              if (req.has_param("offset")) {
                try {
                  offset = std::stoull(req.get_param_value("offset"));
                } catch (const std::exception&) {
                  throw Error(Errc::InvalidArgument, "offset must be a byte count");
                }
              }
              call([&](Scheduler& s) {
                const BuildRecord* r = s.find(job, number);
                if (!r || r->build.version.value != version || r->build.platform.value != platform) {
                  throw Error(Errc::UnknownBuild, job + " #" + std::to_string(number));
                }
                return 0;
              });
              res.set_chunked_content_provider(
                  "text/plain; charset=utf-8",
                  [this, job, number, offset](std::size_t, httplib::DataSink& sink) mutable {
                    constexpr std::size_t kSlice = 64 * 1024;
                    while (!stopping_) {
                      std::string data = store_->read_log(job, number, offset, kSlice);
                      if (data.empty()) {
                        const bool done = call([&](Scheduler& s) {
                          const BuildRecord* r = s.find(job, number);
                          return !r || model::is_terminal(r->build.state);
                        });
                        if (done) {
                          data = store_->read_log(job, number, offset, kSlice);
                          if (data.empty()) {
                            sink.done();
                            return true;
                          }
                        }
                      }
                      if (!data.empty()) {
                        offset += data.size();
                        return sink.write(data.data(), data.size());
                      }
                      std::this_thread::sleep_for(std::chrono::milliseconds(50));
                    }
                    return false;
                  });
            });
          });

  if (!options_.config.ui_dir.empty()) svr.set_mount_point("/ui", options_.config.ui_dir.string());
  svr.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok\n", "text/plain");
  });
}

}  // namespace forgeci::master
