# این فایل باعث میشه پوشه utils به عنوان یک پکیج پایتون شناخته بشه
