#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "edukg/evaluation/evaluation.h"
#include "edukg/interface/pipeline.h"

namespace httplib {
class Server;
}

namespace edukg::interface {

// JSON API over a Runtime:
//   POST /materials                      submit a material, 202 + job id
//   GET  /jobs/{id}                      job snapshot
//   GET  /materials/{id}/kg              ?level=slide|material&slide_no=&format=json|jsonl|graphml
//   POST /eval/sessions                  {material_id, seed, batch_size, annotator_id}
//   GET  /eval/sessions/{id}/next
//   POST /eval/sessions/{id}/judgments   {triple: {subject, predicate, object}, verdict, task}
//   GET  /eval/sessions/{id}/stats
// With a token configured every API route needs "Authorization: Bearer <token>".
class Service {
 public:
  explicit Service(Runtime& runtime);

  void Mount(httplib::Server& server);

 private:
  struct Session {
    std::mutex mu;
    std::string material_id;
    std::unique_ptr<evaluation::SrsSession> srs;
  };

  std::string Submit(const std::string& body);
  std::string JobStatus(const std::string& job_id);
  std::string GetKg(const std::string& material_id, const std::string& level, const std::string& slide_no,
                    const std::string& format, std::string& content_type);
  std::string CreateSession(const std::string& body);
  std::string NextTriple(const std::string& session_id);
  std::string Judge(const std::string& session_id, const std::string& body);
  std::string Stats(const std::string& session_id);

  std::shared_ptr<Session> FindSession(const std::string& session_id);
  std::filesystem::path SessionDir() const;

  Runtime& runtime_;
  std::mutex submit_mu_;
  std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace edukg::interface
