#include "brn/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace brn {

int thread_count()
{
   if (const char* env = std::getenv("BRN_THREADS")) {
      try {
         const int n = std::stoi(env);
         if (n > 0)
            return n;
      } catch (const std::exception&) {
      }
   }
   return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_shards(std::int64_t shards, const std::function<void(std::int64_t)>& body)
{
   const int workers = static_cast<int>(std::min<std::int64_t>(thread_count(), shards));
   if (workers <= 1) {
      for (std::int64_t s = 0; s < shards; ++s)
         body(s);
      return;
   }
   std::atomic<std::int64_t> next{0};
   std::exception_ptr failure;
   std::mutex failure_mutex;
   std::vector<std::thread> pool;
   for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
         for (std::int64_t s; (s = next.fetch_add(1)) < shards;) {
            try {
               body(s);
            } catch (...) {
               std::lock_guard lock(failure_mutex);
               if (!failure)
                  failure = std::current_exception();
            }
         }
      });
   for (auto& t : pool)
      t.join();
   if (failure)
      std::rethrow_exception(failure);
}

} // namespace brn
