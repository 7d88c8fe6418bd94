# این فایل باعث میشه پوشه harness به عنوان یک پکیج پایتون شناخته بشه
